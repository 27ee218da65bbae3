use nalgebra::UnitQuaternion;
use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::control::CommandType;
use crate::geometry::{Aabb, ObjectTag, Shape};
use crate::math::Vec3;
use crate::sensing::{CameraModel, ImuNoise, NoiseError, NoiseSpec, SensorKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Independent agents: no mutual collisions, invisible to each other.
    #[default]
    Parallel,
    /// One swarm sharing a scene: mutual collisions and cross-observations.
    Swarm,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSampling {
    /// Agents take scenes in list order, cycling.
    #[default]
    Sequential,
    /// Each pass over the scene list uses a fresh seeded permutation.
    Shuffled,
}

/// A primitive placed in a config-defined scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveSpec {
    Sphere {
        center: Vec3,
        radius: f64,
        #[serde(default = "obstacle_tag")]
        tag: ObjectTag,
    },
    Box {
        center: Vec3,
        half_extents: Vec3,
        /// `[roll, pitch, yaw]`, rad.
        #[serde(default = "Vec3::zeros")]
        rotation: Vec3,
        #[serde(default = "obstacle_tag")]
        tag: ObjectTag,
    },
}

fn obstacle_tag() -> ObjectTag {
    ObjectTag::Obstacle
}

impl PrimitiveSpec {
    pub fn tag(&self) -> ObjectTag {
        match self {
            PrimitiveSpec::Sphere { tag, .. } | PrimitiveSpec::Box { tag, .. } => *tag,
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            PrimitiveSpec::Sphere { center, radius, .. } => Shape::sphere(*center, *radius),
            PrimitiveSpec::Box {
                center,
                half_extents,
                rotation,
                ..
            } => Shape::cuboid(
                *center,
                *half_extents,
                UnitQuaternion::from_euler_angles(rotation.x, rotation.y, rotation.z),
            ),
        }
    }

    /// Axis-aligned box spanning `b`.
    pub fn aabb(b: &Aabb, tag: ObjectTag) -> Self {
        PrimitiveSpec::Box {
            center: b.center(),
            half_extents: b.extent() * 0.5,
            rotation: Vec3::zeros(),
            tag,
        }
    }
}

/// Where a scene comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneSource {
    Empty,
    /// Random clutter inside an enclosure. Without a fixed `seed` the scene
    /// is regenerated from the reset seed on every full reset.
    Cluttered {
        volume: Aabb,
        /// Expected obstacles per cubic meter.
        density: f64,
        /// Obstacle size range, m.
        size_range: (f64, f64),
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Triangle mesh file, one object per group.
    Mesh { path: String },
    /// Explicit primitives, optionally inside an enclosure.
    Primitives {
        #[serde(default)]
        enclosure: Option<Aabb>,
        #[serde(default)]
        objects: Vec<PrimitiveSpec>,
    },
}

/// Distribution of a 3-vector quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution3 {
    Fixed { value: Vec3 },
    Normal { mean: Vec3, std: Vec3 },
    Uniform { low: Vec3, high: Vec3 },
}

impl Distribution3 {
    pub fn fixed(value: Vec3) -> Self {
        Distribution3::Fixed { value }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match *self {
            Distribution3::Fixed { value } => value,
            Distribution3::Normal { mean, std } => Vec3::from_fn(|i, _| {
                if std[i] == 0.0 {
                    mean[i]
                } else {
                    Normal::new(mean[i], std[i]).expect("validated").sample(rng)
                }
            }),
            Distribution3::Uniform { low, high } => Vec3::from_fn(|i, _| {
                if low[i] == high[i] {
                    low[i]
                } else {
                    rng.gen_range(low[i]..high[i])
                }
            }),
        }
    }

    pub fn validate(&self, field: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| {
            Err(ConfigError::Invalid {
                field: field.to_string(),
                reason: reason.to_string(),
            })
        };
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        match self {
            Distribution3::Fixed { value } if !finite(value) => bad("value must be finite"),
            Distribution3::Normal { mean, std } => {
                if !finite(mean) || !finite(std) || std.iter().any(|&s| s < 0.0) {
                    bad("normal needs a finite mean and std >= 0")
                } else {
                    Ok(())
                }
            }
            Distribution3::Uniform { low, high } => {
                if !finite(low) || !finite(high) || (0..3).any(|i| low[i] > high[i]) {
                    bad("uniform bounds must be finite and ordered")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Initial-condition distributions; orientation is `[roll, pitch, yaw]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitRandomization {
    pub position: Distribution3,
    pub velocity: Distribution3,
    pub orientation: Distribution3,
    pub angular_velocity: Distribution3,
}

impl InitRandomization {
    pub fn fixed_at(position: Vec3) -> Self {
        Self {
            position: Distribution3::fixed(position),
            velocity: Distribution3::fixed(Vec3::zeros()),
            orientation: Distribution3::fixed(Vec3::zeros()),
            angular_velocity: Distribution3::fixed(Vec3::zeros()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.position.validate("env.randomization.position")?;
        self.velocity.validate("env.randomization.velocity")?;
        self.orientation.validate("env.randomization.orientation")?;
        self.angular_velocity.validate("env.randomization.angular_velocity")
    }
}

impl Default for InitRandomization {
    fn default() -> Self {
        Self::fixed_at(Vec3::new(0.0, 0.0, 1.0))
    }
}

/// A sensor attached to every agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensorSpec {
    Depth {
        camera: CameraModel,
        #[serde(default)]
        noise: Option<NoiseSpec>,
    },
    Segmentation {
        camera: CameraModel,
        #[serde(default)]
        noise: Option<NoiseSpec>,
    },
    Imu {
        noise: ImuNoise,
    },
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let noise_err = |e: NoiseError| ConfigError::Invalid {
            field: "env.sensors.noise".into(),
            reason: e.to_string(),
        };
        match self {
            SensorSpec::Depth { camera, noise } => {
                camera.validate()?;
                noise.map_or(Ok(()), |n| n.check(SensorKind::Depth)).map_err(noise_err)
            }
            SensorSpec::Segmentation { camera, noise } => {
                camera.validate()?;
                noise.map_or(Ok(()), |n| n.check(SensorKind::Segmentation)).map_err(noise_err)
            }
            SensorSpec::Imu { noise } => noise.validate().map_err(noise_err),
        }
    }
}

/// Batch environment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub num_agents: usize,
    #[serde(default)]
    pub mode: AgentMode,
    pub scenes: Vec<SceneSource>,
    #[serde(default)]
    pub scene_sampling: SceneSampling,
    pub command_type: CommandType,
    pub episode_max_steps: usize,
    pub randomization: InitRandomization,
    #[serde(default)]
    pub sensors: Vec<SensorSpec>,
    /// Minimum spawn distance to any obstacle, m.
    pub min_spawn_clearance: f64,
    /// Collision sphere radius of each vehicle, m.
    pub drone_radius: f64,
    /// Finished agents respawn on the following step.
    pub auto_reset: bool,
    /// Agents farther than this outside the scene bounds are out of bounds, m.
    pub out_of_bounds_margin: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_agents: 1,
            mode: AgentMode::Parallel,
            scenes: vec![SceneSource::Empty],
            scene_sampling: SceneSampling::Sequential,
            command_type: CommandType::Ctbr,
            episode_max_steps: 500,
            randomization: InitRandomization::default(),
            sensors: Vec::new(),
            min_spawn_clearance: 0.5,
            drone_radius: 0.15,
            auto_reset: true,
            out_of_bounds_margin: 1.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, reason: &str| {
            Err(ConfigError::Invalid {
                field: format!("env.{field}"),
                reason: reason.to_string(),
            })
        };
        if self.num_agents == 0 {
            return bad("num_agents", "must be >= 1");
        }
        if self.scenes.is_empty() {
            return bad("scenes", "at least one scene source is required");
        }
        if self.mode == AgentMode::Swarm && self.scenes.len() > 1 {
            return bad(
                "scenes",
                "swarm mode binds all agents to a single scene instance; give exactly one scene",
            );
        }
        if self.episode_max_steps == 0 {
            return bad("episode_max_steps", "must be >= 1");
        }
        if !(self.min_spawn_clearance >= 0.0 && self.min_spawn_clearance.is_finite()) {
            return bad("min_spawn_clearance", "must be finite and >= 0");
        }
        if !(self.drone_radius > 0.0 && self.drone_radius.is_finite()) {
            return bad("drone_radius", "must be positive");
        }
        if !(self.out_of_bounds_margin >= 0.0) {
            return bad("out_of_bounds_margin", "must be >= 0");
        }
        self.randomization.validate()?;
        for s in &self.sensors {
            s.validate()?;
        }
        for src in &self.scenes {
            if let SceneSource::Cluttered {
                density, size_range, ..
            } = src
            {
                if !(*density >= 0.0) {
                    return bad("scenes.density", "must be >= 0");
                }
                if !(size_range.0 > 0.0 && size_range.0 <= size_range.1) {
                    return bad("scenes.size_range", "must satisfy 0 < min <= max");
                }
            }
        }
        Ok(())
    }
}
