//! Throughput measurement over the batched environment.
//!
//! Rates are aggregate: one agent advancing one control step counts as one
//! physics step, and one agent producing one depth image counts as one
//! frame. The render measurement steps physics too.

use std::time::{Duration, Instant};

use nalgebra::UnitQuaternion;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::control::{Command, CommandType, Ctbr};
use crate::env::{AgentMode, Distribution3, DroneEnv, EnvConfig, EnvError, InitRandomization, SceneSource, SensorSpec};
use crate::geometry::Aabb;
use crate::math::Vec3;
use crate::sensing::CameraModel;
use crate::{Config, ConfigError};

/// Printed with every report.
pub const RATE_DEFINITION: &str = "aggregate over the batch: physics_steps_per_sec = agent-steps/s with no sensors; \
     render_frames_per_sec = depth frames/s, one per agent per step, physics included";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub agents: usize,
    /// Distinct cluttered scene instances; agents are assigned round-robin.
    pub scenes: usize,
    pub width: usize,
    pub height: usize,
    /// Measured time per phase, after warmup.
    pub duration: Duration,
    pub warmup: Duration,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            agents: 100,
            scenes: 1,
            width: 64,
            height: 64,
            duration: Duration::from_secs(5),
            warmup: Duration::from_secs(1),
            seed: 0,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, reason: &str| {
            Err(ConfigError::Invalid {
                field: field.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.agents == 0 {
            return bad("agents", "must be at least 1");
        }
        if self.scenes == 0 {
            return bad("scenes", "must be at least 1");
        }
        if self.width == 0 || self.height == 0 {
            return bad("resolution", "width and height must be positive");
        }
        if self.duration.is_zero() {
            return bad("duration", "must be positive");
        }
        Ok(())
    }

    /// Parallel-mode env over `scenes` fixed-seed cluttered rooms.
    pub fn env_config(&self, render: bool) -> EnvConfig {
        let volume = Aabb::new(Vec3::new(-7.0, -4.0, 0.0), Vec3::new(7.0, 4.0, 4.0));
        let scenes = (0..self.scenes as u64)
            .map(|k| SceneSource::Cluttered {
                volume,
                density: 0.15,
                size_range: (0.3, 0.8),
                seed: Some(self.seed.wrapping_add(k)),
            })
            .collect();
        let sensors = if render {
            vec![SensorSpec::Depth {
                camera: CameraModel {
                    width: self.width,
                    height: self.height,
                    ..CameraModel::default()
                },
                noise: None,
            }]
        } else {
            Vec::new()
        };
        EnvConfig {
            num_agents: self.agents,
            mode: AgentMode::Parallel,
            scenes,
            command_type: CommandType::Ctbr,
            episode_max_steps: 1000,
            randomization: InitRandomization {
                position: Distribution3::Uniform {
                    low: Vec3::new(-6.0, -3.0, 1.0),
                    high: Vec3::new(6.0, 3.0, 3.0),
                },
                ..InitRandomization::fixed_at(Vec3::zeros())
            },
            sensors,
            min_spawn_clearance: 0.5,
            ..EnvConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub agents: usize,
    pub scenes: usize,
    /// (width, height)
    pub resolution: (usize, usize),
    pub physics_steps_per_sec: f64,
    pub render_frames_per_sec: f64,
    /// Measured seconds, both phases, warmup excluded.
    pub wall_time: f64,
    pub machine: String,
    pub definition: String,
}

impl BenchReport {
    /// One `key: value` line per field.
    pub fn to_key_values(&self) -> String {
        format!(
            "agents: {}\nscenes: {}\nresolution: {}x{}\nphysics_steps_per_sec: {:.1}\nrender_frames_per_sec: {:.1}\nwall_time: {:.3}\nmachine: {}\ndefinition: {}\n",
            self.agents,
            self.scenes,
            self.resolution.0,
            self.resolution.1,
            self.physics_steps_per_sec,
            self.render_frames_per_sec,
            self.wall_time,
            self.machine,
            self.definition
        )
    }
}

/// Near-hover CTBR commands: collective jitter around `|g|` and body rates
/// that level the vehicle plus noise.
pub struct HoverPerturbation {
    rng: ChaCha8Rng,
    collective: Normal<f64>,
    rates: Normal<f64>,
}

impl HoverPerturbation {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            collective: Normal::new(0.0, 0.05).unwrap(),
            rates: Normal::new(0.0, 0.3).unwrap(),
        }
    }

    pub fn commands(&mut self, env: &DroneEnv) -> Vec<Command> {
        let g = env.params().gravity.norm();
        (0..env.num_agents())
            .map(|i| {
                let q = UnitQuaternion::from_quaternion(env.state(i).orientation);
                let (roll, pitch, _) = q.euler_angles();
                let rates = Vec3::new(
                    -2.0 * roll + self.rates.sample(&mut self.rng),
                    -2.0 * pitch + self.rates.sample(&mut self.rng),
                    self.rates.sample(&mut self.rng),
                );
                let collective = g * (1.0 + self.collective.sample(&mut self.rng));
                Command::Ctbr(Ctbr::new(collective, rates))
            })
            .collect()
    }
}

/// Agent-steps per second of one env over `spec.duration`.
fn measure(config: &Config, env_cfg: EnvConfig, spec: &BenchSpec) -> Result<(f64, f64), EnvError> {
    let mut env = DroneEnv::with_task(config, env_cfg, config.task.build())?;
    env.reset(spec.seed)?;
    let mut commands = HoverPerturbation::new(spec.seed);
    let start = Instant::now();
    while start.elapsed() < spec.warmup {
        let c = commands.commands(&env);
        env.step(&c)?;
    }
    let start = Instant::now();
    let mut steps = 0u64;
    while start.elapsed() < spec.duration {
        let c = commands.commands(&env);
        env.step(&c)?;
        steps += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((steps as f64 * spec.agents as f64 / elapsed, elapsed))
}

/// Physics-only, then physics plus depth rendering.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport, EnvError> {
    spec.validate()?;
    let config = Config::default();
    let (physics, t_physics) = measure(&config, spec.env_config(false), spec)?;
    let (render, t_render) = measure(&config, spec.env_config(true), spec)?;
    Ok(BenchReport {
        agents: spec.agents,
        scenes: spec.scenes,
        resolution: (spec.width, spec.height),
        physics_steps_per_sec: physics,
        render_frames_per_sec: render,
        wall_time: t_physics + t_render,
        machine: machine_descriptor(),
        definition: RATE_DEFINITION.to_string(),
    })
}

/// Physics-only agent-steps per second, for scaling comparisons.
pub fn physics_rate(spec: &BenchSpec) -> Result<f64, EnvError> {
    spec.validate()?;
    let config = Config::default();
    Ok(measure(&config, spec.env_config(false), spec)?.0)
}

/// CPU model, worker threads, OS and architecture.
pub fn machine_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".to_string());
    format!(
        "{cpu}; {} worker threads; {}-{}",
        rayon::current_num_threads(),
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}
