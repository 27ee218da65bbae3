//! Fixtures shared by the hot-path benchmarks.

use aerogym::geometry::{generate_cluttered_scene, Aabb, ObjectTag, Scene, SceneBuilder, Shape, TriMesh};
use aerogym::math::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn room() -> Aabb {
    Aabb::new(Vec3::new(-7.0, -4.0, 0.0), Vec3::new(7.0, 4.0, 4.0))
}

/// Cluttered room at the navigation density.
pub fn cluttered_scene(seed: u64) -> Scene {
    generate_cluttered_scene(seed, &room(), 0.15, (0.3, 0.8)).expect("valid clutter spec")
}

/// One mesh object made of `n` small random triangles inside the room.
pub fn triangle_soup(n: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = room();
    let mut vertices = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let c = Vec3::from_fn(|i, _| rng.gen_range(b.min[i]..b.max[i]));
        for _ in 0..3 {
            vertices.push(c + Vec3::from_fn(|_, _| rng.gen_range(-0.2..0.2)));
        }
    }
    let triangles = (0..n as u32).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
    let mut builder = SceneBuilder::new();
    builder.add(ObjectTag::Structure, Shape::TriMesh(TriMesh { vertices, triangles }));
    builder.build().expect("finite triangles")
}

/// Uniform points in the room.
pub fn query_points(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = room();
    (0..n)
        .map(|_| Vec3::from_fn(|i, _| rng.gen_range(b.min[i]..b.max[i])))
        .collect()
}
