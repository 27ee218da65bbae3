//! The shipped tasks and their default environments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{
    AgentMode, Distribution3, EnvConfig, InitRandomization, PrimitiveSpec, SceneSource, SensorSpec,
};
use super::task::{AgentContext, Observation, Task, VisionFrame};
use crate::control::CommandType;
use crate::dynamics::QuadState;
use crate::geometry::{Aabb, ObjectTag, Scene};
use crate::math::Vec3;
use crate::sensing::{CameraModel, CameraMount};

/// Task selection, as written in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskSpec {
    Hover(HoverTask),
    Navigation(NavigationTask),
    Landing(LandingTask),
    GapCrossing(GapCrossingTask),
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec::Hover(HoverTask::default())
    }
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Hover(_) => "hover",
            TaskSpec::Navigation(_) => "navigation",
            TaskSpec::Landing(_) => "landing",
            TaskSpec::GapCrossing(_) => "gap_crossing",
        }
    }

    /// Environment settings the task is designed for. Config files override
    /// them key by key.
    pub fn default_env(&self) -> EnvConfig {
        match self {
            TaskSpec::Hover(t) => t.default_env(),
            TaskSpec::Navigation(t) => t.default_env(),
            TaskSpec::Landing(t) => t.default_env(),
            TaskSpec::GapCrossing(t) => t.default_env(),
        }
    }

    pub fn build(&self) -> Box<dyn Task> {
        match self {
            TaskSpec::Hover(t) => Box::new(t.clone()),
            TaskSpec::Navigation(t) => Box::new(t.clone()),
            TaskSpec::Landing(t) => Box::new(t.clone()),
            TaskSpec::GapCrossing(t) => Box::new(t.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), crate::ConfigError> {
        let bad = |field: &str, reason: &str| {
            Err(crate::ConfigError::Invalid {
                field: format!("task.{field}"),
                reason: reason.to_string(),
            })
        };
        match self {
            TaskSpec::Navigation(t) => {
                if !(t.success_radius > 0.0) {
                    return bad("success_radius", "must be positive");
                }
                if !(t.density >= 0.0) {
                    return bad("density", "must be >= 0");
                }
                if !(t.size_range.0 > 0.0 && t.size_range.0 <= t.size_range.1) {
                    return bad("size_range", "must satisfy 0 < min <= max");
                }
                if (0..3).any(|i| t.target_region.min[i] > t.target_region.max[i]) {
                    return bad("target_region", "bounds must be ordered");
                }
            }
            TaskSpec::Landing(t) => {
                if !(t.pad_size > 0.0) {
                    return bad("pad_size", "must be positive");
                }
            }
            TaskSpec::GapCrossing(t) => {
                if !(t.gap_width > 0.0) {
                    return bad("gap_width", "must be positive");
                }
                if t.lanes.is_empty() {
                    return bad("lanes", "at least one lane is required");
                }
                if !(t.start_x < -t.wall_thickness && t.target_x > t.wall_thickness) {
                    return bad("start_x", "start and target must lie on opposite sides of the wall");
                }
            }
            TaskSpec::Hover(_) => {}
        }
        Ok(())
    }
}

fn depth_camera() -> SensorSpec {
    SensorSpec::Depth {
        camera: CameraModel::default(),
        noise: None,
    }
}

fn unit_toward(from: &Vec3, to: &Vec3) -> Vec3 {
    let d = to - from;
    let n = d.norm();
    if n > 1e-12 {
        d / n
    } else {
        Vec3::zeros()
    }
}

/// Hold a fixed position. Never succeeds; the reward is the negative
/// distance to the hold point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoverTask {
    pub position: Vec3,
}

impl Default for HoverTask {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 1.0),
        }
    }
}

impl HoverTask {
    fn default_env(&self) -> EnvConfig {
        EnvConfig {
            randomization: InitRandomization::fixed_at(self.position),
            ..EnvConfig::default()
        }
    }
}

impl Task for HoverTask {
    fn name(&self) -> &str {
        "hover"
    }

    fn sample_target(&self, _: usize, _: &QuadState, _: &Scene, _: &mut ChaCha8Rng) -> Option<Vec3> {
        Some(self.position)
    }

    fn get_observation(&self, ctx: &AgentContext) -> Observation {
        ctx.observation((ctx.target - ctx.state.position).as_slice().to_vec())
    }

    fn get_reward(&self, ctx: &AgentContext) -> f64 {
        -(ctx.target - ctx.state.position).norm()
    }

    fn get_success(&self, _: &AgentContext) -> bool {
        false
    }
}

/// Fly through random clutter to a target on the far side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigationTask {
    /// Flight volume; the clutter fills it and walls enclose it.
    pub volume: Aabb,
    /// Obstacles per cubic meter.
    pub density: f64,
    pub size_range: (f64, f64),
    /// Spawn region (before randomization overrides).
    pub start_region: Aabb,
    /// Targets are drawn uniformly here, away from obstacles.
    pub target_region: Aabb,
    pub target_clearance: f64,
    pub success_radius: f64,
    pub w_distance: f64,
    pub w_speed: f64,
    pub w_collision: f64,
    /// Obstacles closer than this are penalized, m.
    pub safe_distance: f64,
}

impl Default for NavigationTask {
    fn default() -> Self {
        Self {
            volume: Aabb::new(Vec3::new(-7.0, -4.0, 0.0), Vec3::new(7.0, 4.0, 4.0)),
            density: 0.15,
            size_range: (0.3, 0.8),
            start_region: Aabb::new(Vec3::new(-6.0, -3.0, 1.0), Vec3::new(-4.5, 3.0, 3.0)),
            target_region: Aabb::new(Vec3::new(4.5, -3.0, 1.0), Vec3::new(6.0, 3.0, 3.0)),
            target_clearance: 1.0,
            success_radius: 0.5,
            w_distance: 1.0,
            w_speed: 0.05,
            w_collision: 1.0,
            safe_distance: 0.6,
        }
    }
}

impl NavigationTask {
    fn default_env(&self) -> EnvConfig {
        EnvConfig {
            scenes: vec![SceneSource::Cluttered {
                volume: self.volume,
                density: self.density,
                size_range: self.size_range,
                seed: None,
            }],
            command_type: CommandType::Ctbr,
            episode_max_steps: 750,
            randomization: InitRandomization {
                position: Distribution3::Uniform {
                    low: self.start_region.min,
                    high: self.start_region.max,
                },
                ..InitRandomization::fixed_at(Vec3::zeros())
            },
            sensors: vec![depth_camera()],
            min_spawn_clearance: 1.0,
            ..EnvConfig::default()
        }
    }
}

/// Rejection-sample a point in `region` at least `clearance` from every
/// obstacle.
fn sample_clear_point(region: &Aabb, clearance: f64, scene: &Scene, rng: &mut ChaCha8Rng) -> Option<Vec3> {
    for _ in 0..1000 {
        let p = Vec3::from_fn(|i, _| {
            if region.min[i] < region.max[i] {
                rng.gen_range(region.min[i]..region.max[i])
            } else {
                region.min[i]
            }
        });
        let clear = match scene.nearest_point(&p) {
            Ok(n) => n.distance >= clearance && !scene.inside_solid(&p),
            Err(_) => true,
        };
        if clear {
            return Some(p);
        }
    }
    None
}

impl Task for NavigationTask {
    fn name(&self) -> &str {
        "navigation"
    }

    fn sample_target(&self, _: usize, _: &QuadState, scene: &Scene, rng: &mut ChaCha8Rng) -> Option<Vec3> {
        sample_clear_point(&self.target_region, self.target_clearance, scene, rng)
    }

    fn get_observation(&self, ctx: &AgentContext) -> Observation {
        ctx.observation(ctx.target.as_slice().to_vec())
    }

    /// `w_d * progress + w_s * speed toward target - w_c * proximity`.
    fn get_reward(&self, ctx: &AgentContext) -> f64 {
        let before = (ctx.target - ctx.previous_state.position).norm();
        let after = (ctx.target - ctx.state.position).norm();
        let toward = ctx.state.velocity.dot(&unit_toward(&ctx.state.position, ctx.target));
        let clearance = ctx.nearest_distance() - ctx.drone_radius;
        let proximity = if ctx.collision {
            1.0
        } else {
            ((self.safe_distance - clearance) / self.safe_distance).clamp(0.0, 1.0).powi(2)
        };
        self.w_distance * (before - after) + self.w_speed * toward * ctx.control_dt
            - self.w_collision * proximity
    }

    fn get_success(&self, ctx: &AgentContext) -> bool {
        (ctx.state.position - ctx.target).norm() < self.success_radius
    }
}

/// Land on a square pad seen by a downward segmentation camera.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandingTask {
    /// Pad center on the ground, m.
    pub pad_center: Vec3,
    /// Pad edge length, m.
    pub pad_size: f64,
    pub pad_thickness: f64,
    /// Room enclosing the flight.
    pub volume: Aabb,
    pub w_height: f64,
    pub w_speed: f64,
    pub w_collision: f64,
}

impl Default for LandingTask {
    fn default() -> Self {
        Self {
            pad_center: Vec3::zeros(),
            pad_size: 0.5,
            pad_thickness: 0.02,
            volume: Aabb::new(Vec3::new(-4.0, -4.0, 0.0), Vec3::new(4.0, 4.0, 4.0)),
            w_height: 1.0,
            w_speed: 0.5,
            w_collision: 10.0,
        }
    }
}

impl LandingTask {
    pub fn pad_top(&self) -> f64 {
        self.pad_center.z + self.pad_thickness
    }

    /// Gap between the bottom of the vehicle's collision sphere and the pad
    /// surface.
    pub fn height(&self, state: &QuadState, drone_radius: f64) -> f64 {
        state.position.z - drone_radius - self.pad_top()
    }

    pub fn over_pad(&self, p: &Vec3) -> bool {
        let h = self.pad_size / 2.0;
        (p.x - self.pad_center.x).abs() <= h && (p.y - self.pad_center.y).abs() <= h
    }

    fn default_env(&self) -> EnvConfig {
        let pad = Aabb::new(
            self.pad_center - Vec3::new(self.pad_size / 2.0, self.pad_size / 2.0, 0.0),
            self.pad_center + Vec3::new(self.pad_size / 2.0, self.pad_size / 2.0, self.pad_thickness),
        );
        let c = self.pad_center;
        EnvConfig {
            scenes: vec![SceneSource::Primitives {
                enclosure: Some(self.volume),
                objects: vec![PrimitiveSpec::aabb(&pad, ObjectTag::Target)],
            }],
            command_type: CommandType::Ctbr,
            episode_max_steps: 500,
            randomization: InitRandomization {
                position: Distribution3::Uniform {
                    low: c + Vec3::new(-1.0, -1.0, 1.5),
                    high: c + Vec3::new(1.0, 1.0, 2.5),
                },
                velocity: Distribution3::Normal {
                    mean: Vec3::zeros(),
                    std: Vec3::repeat(0.1),
                },
                orientation: Distribution3::Uniform {
                    low: Vec3::new(0.0, 0.0, -std::f64::consts::PI),
                    high: Vec3::new(0.0, 0.0, std::f64::consts::PI),
                },
                angular_velocity: Distribution3::fixed(Vec3::zeros()),
            },
            sensors: vec![SensorSpec::Segmentation {
                camera: CameraModel {
                    pose_offset: CameraMount::downward(),
                    ..CameraModel::default()
                },
                noise: None,
            }],
            min_spawn_clearance: 0.5,
            ..EnvConfig::default()
        }
    }
}

/// Normalized pixel centroid `[u, v, 1]` of object `id` in a segmentation
/// frame (`u` along columns, `v` along rows, both in `[-1, 1]`), or the
/// sentinel `[0, 0, 0]` when the object is not visible.
pub fn centroid_feature(frames: &[VisionFrame], id: Option<u32>) -> Vec<f64> {
    let seg = frames.iter().find_map(|f| match f {
        VisionFrame::Segmentation(s) => Some(s),
        _ => None,
    });
    match (seg, id) {
        (Some(s), Some(id)) => match s.centroid(id) {
            Some((col, row, _)) => vec![
                (col + 0.5) / s.width as f64 * 2.0 - 1.0,
                (row + 0.5) / s.height as f64 * 2.0 - 1.0,
                1.0,
            ],
            None => vec![0.0; 3],
        },
        _ => vec![0.0; 3],
    }
}

/// Id of the landing pad in `scene`: the first object tagged as target.
pub fn pad_id(scene: &Scene) -> Option<u32> {
    scene
        .objects()
        .iter()
        .find(|o| o.tag == ObjectTag::Target)
        .map(|o| o.id)
}

impl Task for LandingTask {
    fn name(&self) -> &str {
        "landing"
    }

    fn sample_target(&self, _: usize, _: &QuadState, _: &Scene, _: &mut ChaCha8Rng) -> Option<Vec3> {
        Some(Vec3::new(self.pad_center.x, self.pad_center.y, self.pad_top()))
    }

    fn get_observation(&self, ctx: &AgentContext) -> Observation {
        ctx.observation(centroid_feature(ctx.vision, pad_id(ctx.scene)))
    }

    /// `-w_h * height + w_s * exp(-speed) - w_c * collision`.
    fn get_reward(&self, ctx: &AgentContext) -> f64 {
        let height = self.height(ctx.state, ctx.drone_radius).max(0.0);
        let speed = ctx.state.velocity.norm();
        -self.w_height * height + self.w_speed * (-speed).exp()
            - self.w_collision * f64::from(u8::from(ctx.collision))
    }

    fn get_success(&self, ctx: &AgentContext) -> bool {
        self.height(ctx.state, ctx.drone_radius) < 0.1
            && ctx.state.velocity.norm() < 0.1
            && self.over_pad(&ctx.state.position)
    }
}

/// Several agents cross a wall through one gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapCrossingTask {
    pub gap_width: f64,
    /// Gap center along y, m.
    pub gap_center: f64,
    pub wall_thickness: f64,
    /// Per-agent lateral offset (y) of start and target, m.
    pub lanes: Vec<f64>,
    pub start_x: f64,
    pub target_x: f64,
    pub altitude: f64,
    pub success_radius: f64,
    pub volume: Aabb,
    pub w_distance: f64,
    pub w_collision: f64,
}

impl Default for GapCrossingTask {
    fn default() -> Self {
        Self {
            gap_width: 1.0,
            gap_center: 0.0,
            wall_thickness: 0.2,
            lanes: vec![-1.5, 0.0, 1.5],
            start_x: -4.0,
            target_x: 4.0,
            altitude: 1.5,
            success_radius: 0.5,
            volume: Aabb::new(Vec3::new(-6.0, -4.0, 0.0), Vec3::new(6.0, 4.0, 3.0)),
            w_distance: 1.0,
            w_collision: 10.0,
        }
    }
}

impl GapCrossingTask {
    fn lane(&self, agent: usize) -> f64 {
        self.lanes[agent % self.lanes.len()]
    }

    fn default_env(&self) -> EnvConfig {
        let (lo, hi) = (self.volume.min, self.volume.max);
        let t = self.wall_thickness / 2.0;
        let g0 = self.gap_center - self.gap_width / 2.0;
        let g1 = self.gap_center + self.gap_width / 2.0;
        let mut objects = Vec::new();
        if g0 > lo.y {
            objects.push(PrimitiveSpec::aabb(
                &Aabb::new(Vec3::new(-t, lo.y, lo.z), Vec3::new(t, g0, hi.z)),
                ObjectTag::Structure,
            ));
        }
        if g1 < hi.y {
            objects.push(PrimitiveSpec::aabb(
                &Aabb::new(Vec3::new(-t, g1, lo.z), Vec3::new(t, hi.y, hi.z)),
                ObjectTag::Structure,
            ));
        }
        EnvConfig {
            num_agents: self.lanes.len(),
            mode: AgentMode::Swarm,
            scenes: vec![SceneSource::Primitives {
                enclosure: Some(self.volume),
                objects,
            }],
            command_type: CommandType::Ctbr,
            episode_max_steps: 1000,
            randomization: InitRandomization {
                position: Distribution3::Normal {
                    mean: Vec3::new(self.start_x, 0.0, self.altitude),
                    std: Vec3::repeat(0.1),
                },
                ..InitRandomization::fixed_at(Vec3::zeros())
            },
            sensors: vec![depth_camera()],
            min_spawn_clearance: 0.5,
            ..EnvConfig::default()
        }
    }
}

impl Task for GapCrossingTask {
    fn name(&self) -> &str {
        "gap_crossing"
    }

    fn spawn_offset(&self, agent: usize) -> Vec3 {
        Vec3::new(0.0, self.lane(agent), 0.0)
    }

    fn sample_target(&self, agent: usize, _: &QuadState, _: &Scene, _: &mut ChaCha8Rng) -> Option<Vec3> {
        Some(Vec3::new(self.target_x, self.lane(agent), self.altitude))
    }

    fn get_observation(&self, ctx: &AgentContext) -> Observation {
        ctx.observation(ctx.target.as_slice().to_vec())
    }

    fn get_reward(&self, ctx: &AgentContext) -> f64 {
        let before = (ctx.target - ctx.previous_state.position).norm();
        let after = (ctx.target - ctx.state.position).norm();
        self.w_distance * (before - after) - self.w_collision * f64::from(u8::from(ctx.collision))
    }

    /// Collisions terminate the episode first, so reaching the target
    /// implies a collision-free flight.
    fn get_success(&self, ctx: &AgentContext) -> bool {
        !ctx.collision && (ctx.state.position - ctx.target).norm() < self.success_radius
    }
}
