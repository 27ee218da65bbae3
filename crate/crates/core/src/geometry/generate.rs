//! Random cluttered scenes.

use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::aabb::Aabb;
use super::primitives::Shape;
use super::scene::{GeometryError, ObjectTag, Scene, SceneBuilder};
use crate::math::Vec3;

/// Thickness of the enclosure slabs, m.
pub const WALL_THICKNESS: f64 = 0.2;

/// Parameters of [`generate_cluttered_scene`], as they appear in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterSpec {
    pub volume: Aabb,
    /// Expected obstacles per cubic meter.
    pub density: f64,
    /// Obstacle size range (sphere diameter / box edge), m.
    pub size_range: (f64, f64),
}

impl ClutterSpec {
    pub fn generate(&self, seed: u64) -> Result<Scene, GeometryError> {
        generate_cluttered_scene(seed, &self.volume, self.density, self.size_range)
    }
}

/// Six slabs just outside `volume`: floor, ceiling and four side walls.
pub fn add_enclosure(builder: &mut SceneBuilder, volume: &Aabb) {
    let (lo, hi) = (volume.min, volume.max);
    let t = WALL_THICKNESS;
    let slabs = [
        (Vec3::new(lo.x - t, lo.y - t, lo.z - t), Vec3::new(hi.x + t, hi.y + t, lo.z)),
        (Vec3::new(lo.x - t, lo.y - t, hi.z), Vec3::new(hi.x + t, hi.y + t, hi.z + t)),
        (Vec3::new(lo.x - t, lo.y - t, lo.z), Vec3::new(lo.x, hi.y + t, hi.z)),
        (Vec3::new(hi.x, lo.y - t, lo.z), Vec3::new(hi.x + t, hi.y + t, hi.z)),
        (Vec3::new(lo.x, lo.y - t, lo.z), Vec3::new(hi.x, lo.y, hi.z)),
        (Vec3::new(lo.x, hi.y, lo.z), Vec3::new(hi.x, hi.y + t, hi.z)),
    ];
    for (a, b) in slabs {
        builder.add(ObjectTag::Structure, Shape::aabb(&Aabb::new(a, b)));
    }
}

/// An enclosed volume filled with a Poisson-distributed number of random
/// convex obstacles (spheres and rotated boxes) with centers uniform in the
/// volume. Enclosure slabs take ids 1..=6, obstacles follow. The result
/// depends only on the arguments.
pub fn generate_cluttered_scene(
    seed: u64,
    volume: &Aabb,
    density: f64,
    size_range: (f64, f64),
) -> Result<Scene, GeometryError> {
    let invalid = |reason: &str| GeometryError::InvalidObject {
        id: 0,
        reason: reason.to_string(),
    };
    if !(density >= 0.0 && density.is_finite()) {
        return Err(invalid("density must be finite and >= 0"));
    }
    let (smin, smax) = size_range;
    if !(smin > 0.0 && smin <= smax && smax.is_finite()) {
        return Err(invalid("size range must satisfy 0 < min <= max"));
    }
    if !volume.is_valid() || volume.volume() <= 0.0 {
        return Err(invalid("volume must have positive extent"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = SceneBuilder::new();
    add_enclosure(&mut builder, volume);
    let lambda = density * volume.volume();
    let count = if lambda > 0.0 {
        Poisson::new(lambda)
            .map_err(|e| invalid(&e.to_string()))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    for _ in 0..count {
        let center = Vec3::from_fn(|i, _| rng.gen_range(volume.min[i]..=volume.max[i]));
        let size = rng.gen_range(smin..=smax);
        if rng.gen_bool(0.5) {
            builder.add(ObjectTag::Obstacle, Shape::sphere(center, size / 2.0));
        } else {
            let half = Vec3::from_fn(|_, _| size / 2.0 * rng.gen_range(0.5..=1.0));
            let rotation = UnitQuaternion::from_euler_angles(
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            );
            builder.add(ObjectTag::Obstacle, Shape::cuboid(center, half, rotation));
        }
    }
    builder.build()
}
