//! The batched environment.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::UnitQuaternion;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentMode, EnvConfig, SceneSampling, SceneSource, SensorSpec};
use super::task::{AgentContext, Observation, Task, VisionFrame};
use crate::config::{Config, ConfigError};
use crate::control::{command_to_rotor_speeds, Command, CommandError, ControllerGains};
use crate::dynamics::{step, total_wrench, QuadParams, QuadState, SimConfig};
use crate::geometry::{
    add_enclosure, generate_cluttered_scene, load_mesh_scene, GeometryError, MeshParseError, ProximityResult,
    RayQuery, Scene, SceneBuilder, SceneWithSpheres, Sphere, DYNAMIC_ID_BASE,
};
use crate::math::{Vec3, Vec4};
use crate::sensing::{apply_noise, imu_read, render_depth, render_segmentation, NoiseError, Pose};

/// Spawn rejection-sampling budget per agent.
pub const MAX_SPAWN_ATTEMPTS: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("step called before reset")]
    NotReset,
    #[error("expected {expected} actions, got {got}")]
    ActionShapeMismatch { expected: usize, got: usize },
    #[error("invalid command for agent {agent}: {source}")]
    InvalidCommand {
        agent: usize,
        #[source]
        source: CommandError,
    },
    #[error("agent {agent}: no spawn with the required clearance after {attempts} attempts")]
    SpawnFailure { agent: usize, attempts: usize },
    #[error("agent {agent}: the task found no valid target")]
    NoTarget { agent: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshParseError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Per-agent diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub success: bool,
    pub collision: bool,
    pub out_of_bounds: bool,
    /// Integration blew up; the pre-step state was kept. Also reported as
    /// out of bounds.
    pub non_finite: bool,
    /// Distance to the nearest static obstacle (infinite in an empty scene).
    pub nearest_distance: f64,
    pub nearest_object: Option<u32>,
    /// False while a finished agent waits (auto-reset off, or swarm members
    /// waiting for the rest of the swarm).
    pub active: bool,
    /// The agent was respawned at the start of this step; its action was
    /// ignored.
    pub reset: bool,
    pub episode_step: usize,
    /// The controller clipped the command at the rotor limits.
    pub saturated: bool,
}

/// Result of one batched step. All vectors have one entry per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    pub infos: Vec<AgentInfo>,
}

/// One line of an episode log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub agent: usize,
    pub state: [f64; 13],
    /// Flat command; absent on reset records.
    pub action: Option<[f64; 4]>,
    pub reward: f64,
    pub flags: LogFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFlags {
    pub success: bool,
    pub collision: bool,
    pub out_of_bounds: bool,
    pub terminated: bool,
    pub truncated: bool,
    pub reset: bool,
    pub active: bool,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of agent `agent` under environment seed `seed`; [`DroneEnv::reset`]
/// uses exactly these.
pub fn agent_seed(seed: u64, agent: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ (agent as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[derive(Clone, Debug)]
struct Agent {
    rng: ChaCha8Rng,
    state: QuadState,
    target: Vec3,
    scene: usize,
    episode_step: usize,
    done: bool,
    last: Option<Outcome>,
}

#[derive(Clone, Debug)]
struct Outcome {
    observation: Observation,
    terminated: bool,
    truncated: bool,
    info: AgentInfo,
}

/// Read-only view of the world shared by all agents during evaluation.
struct World<'a> {
    cfg: &'a EnvConfig,
    task: &'a dyn Task,
    params: &'a QuadParams,
    sim: &'a SimConfig,
    scenes: &'a [Arc<Scene>],
    states: &'a [QuadState],
    /// Agents present in the world (collidable, visible to others).
    live: &'a [bool],
}

impl World<'_> {
    fn swarm(&self) -> bool {
        self.cfg.mode == AgentMode::Swarm
    }

    fn other_states(&self, i: usize) -> Vec<QuadState> {
        if !self.swarm() {
            return Vec::new();
        }
        (0..self.states.len()).filter(|&j| j != i).map(|j| self.states[j]).collect()
    }

    fn other_spheres(&self, i: usize) -> Vec<(u32, Sphere)> {
        if !self.swarm() {
            return Vec::new();
        }
        (0..self.states.len())
            .filter(|&j| j != i && self.live[j])
            .map(|j| {
                (
                    DYNAMIC_ID_BASE + j as u32,
                    Sphere {
                        center: self.states[j].position,
                        radius: self.cfg.drone_radius,
                    },
                )
            })
            .collect()
    }

    fn render(&self, i: usize, scene: &Scene, rng: &mut ChaCha8Rng) -> Result<Vec<VisionFrame>, NoiseError> {
        let spheres = self.other_spheres(i);
        let with_spheres = SceneWithSpheres { scene, spheres: &spheres };
        let query: &dyn RayQuery = if spheres.is_empty() { scene } else { &with_spheres };
        let pose = Pose::from_state(&self.states[i]);
        let mut frames = Vec::new();
        for sensor in &self.cfg.sensors {
            match sensor {
                SensorSpec::Depth { camera, noise } => {
                    let mut d = render_depth(query, &pose, camera);
                    if let Some(n) = noise {
                        d = apply_noise(&d, n, rng)?;
                    }
                    frames.push(VisionFrame::Depth(d));
                }
                SensorSpec::Segmentation { camera, noise } => {
                    let mut s = render_segmentation(query, &pose, camera);
                    if let Some(n) = noise {
                        s = apply_noise(&s, n, rng)?;
                    }
                    frames.push(VisionFrame::Segmentation(s));
                }
                SensorSpec::Imu { .. } => {}
            }
        }
        Ok(frames)
    }

    fn imu(&self, i: usize, rng: &mut ChaCha8Rng) -> Result<Option<crate::sensing::ImuReading>, NoiseError> {
        for sensor in &self.cfg.sensors {
            if let SensorSpec::Imu { noise } = sensor {
                let s = &self.states[i];
                let ideal = imu_read(s, &total_wrench(s, self.params), self.params);
                return noise.apply(&ideal, rng).map(Some);
            }
        }
        Ok(None)
    }

    fn out_of_bounds(&self, scene: &Scene, p: &Vec3) -> bool {
        if !p.iter().all(|v| v.is_finite()) {
            return true;
        }
        match scene.bounds() {
            Some(b) => !b.inflate(self.cfg.out_of_bounds_margin).contains(p),
            None => false,
        }
    }

    /// Sensors, flags and hooks for agent `i` in its current state.
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        i: usize,
        agent: &mut Agent,
        previous: &QuadState,
        command: Option<&Command>,
        agent_contact: bool,
        non_finite: bool,
        saturated: bool,
        just_reset: bool,
    ) -> Result<(Outcome, f64), NoiseError> {
        let scene = &*self.scenes[agent.scene];
        let state = &self.states[i];
        let proximity: Option<ProximityResult> = scene.nearest_point(&state.position).ok();
        let scene_contact = proximity.is_some_and(|p| p.distance < self.cfg.drone_radius)
            || scene.inside_solid(&state.position);
        let collision = !just_reset && (scene_contact || agent_contact);
        let out_of_bounds = !just_reset && (non_finite || self.out_of_bounds(scene, &state.position));
        let vision = self.render(i, scene, &mut agent.rng)?;
        let imu = self.imu(i, &mut agent.rng)?;
        let swarm = self.other_states(i);
        let ctx = AgentContext {
            agent: i,
            episode_step: agent.episode_step,
            state,
            previous_state: previous,
            command,
            target: &agent.target,
            scene,
            proximity,
            collision,
            out_of_bounds,
            vision: &vision,
            imu: imu.as_ref(),
            swarm: &swarm,
            sensors: &self.cfg.sensors,
            drone_radius: self.cfg.drone_radius,
            control_dt: self.sim.control_dt,
        };
        let observation = self.task.get_observation(&ctx);
        let (success, reward) = if just_reset {
            (false, 0.0)
        } else {
            (self.task.get_success(&ctx), self.task.get_reward(&ctx))
        };
        let terminated = success || collision || out_of_bounds;
        let truncated = !terminated && !just_reset && agent.episode_step >= self.cfg.episode_max_steps;
        let info = AgentInfo {
            success,
            collision,
            out_of_bounds,
            non_finite,
            nearest_distance: proximity.map_or(f64::INFINITY, |p| p.distance),
            nearest_object: proximity.map(|p| p.object_id),
            active: true,
            reset: just_reset,
            episode_step: agent.episode_step,
            saturated,
        };
        Ok((
            Outcome {
                observation,
                terminated,
                truncated,
                info,
            },
            reward,
        ))
    }
}

/// Batched gym-style environment over `num_agents` vehicles.
///
/// Call [`reset`](Self::reset) first, then [`step`](Self::step) with one
/// command per agent. With auto-reset on, an agent that terminates or
/// truncates reports its final observation once and is respawned at the
/// start of the following step (its action for that step is ignored and
/// `info.reset` is set). In swarm mode finished agents leave the world
/// (no collisions, not rendered) and the whole swarm respawns together once
/// every member has finished.
pub struct DroneEnv {
    params: QuadParams,
    sim: SimConfig,
    gains: ControllerGains,
    cfg: EnvConfig,
    task: Box<dyn Task>,
    /// Scenes that do not depend on the reset seed, built once.
    cached: Vec<Option<Arc<Scene>>>,
    scenes: Vec<Arc<Scene>>,
    scene_rng: ChaCha8Rng,
    scene_queue: VecDeque<usize>,
    agents: Vec<Agent>,
    step_index: u64,
    log: Option<Vec<LogRecord>>,
}

impl std::fmt::Debug for DroneEnv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DroneEnv")
            .field("task", &self.task.name())
            .field("num_agents", &self.cfg.num_agents)
            .field("mode", &self.cfg.mode)
            .field("step_index", &self.step_index)
            .finish_non_exhaustive()
    }
}

fn build_scene(source: &SceneSource, seed: u64) -> Result<Scene, EnvError> {
    Ok(match source {
        SceneSource::Empty => Scene::empty(),
        SceneSource::Cluttered {
            volume,
            density,
            size_range,
            seed: fixed,
        } => generate_cluttered_scene(fixed.unwrap_or(seed), volume, *density, *size_range)?,
        SceneSource::Mesh { path } => load_mesh_scene(path)?,
        SceneSource::Primitives { enclosure, objects } => {
            let mut b = SceneBuilder::new();
            if let Some(v) = enclosure {
                add_enclosure(&mut b, v);
            }
            for o in objects {
                b.add(o.tag(), o.shape());
            }
            b.build()?
        }
    })
}

fn seed_dependent(source: &SceneSource) -> bool {
    matches!(source, SceneSource::Cluttered { seed: None, .. })
}

impl DroneEnv {
    /// Environment for `config.task` with settings `config.env`.
    pub fn new(config: &Config) -> Result<Self, EnvError> {
        Self::with_task(config, config.env.clone(), config.task.build())
    }

    /// Environment driven by custom task hooks.
    pub fn with_task(config: &Config, env: EnvConfig, task: Box<dyn Task>) -> Result<Self, EnvError> {
        config.validate()?;
        env.validate()?;
        let cached = env
            .scenes
            .iter()
            .map(|s| {
                if seed_dependent(s) {
                    Ok(None)
                } else {
                    build_scene(s, 0).map(|sc| Some(Arc::new(sc)))
                }
            })
            .collect::<Result<Vec<_>, EnvError>>()?;
        Ok(Self {
            params: config.quad.clone(),
            sim: config.sim,
            gains: config.gains.clone(),
            cfg: env,
            task,
            cached,
            scenes: Vec::new(),
            scene_rng: ChaCha8Rng::seed_from_u64(0),
            scene_queue: VecDeque::new(),
            agents: Vec::new(),
            step_index: 0,
            log: None,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.cfg.num_agents
    }

    pub fn env_config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn task(&self) -> &dyn Task {
        &*self.task
    }

    pub fn params(&self) -> &QuadParams {
        &self.params
    }

    pub fn sim_config(&self) -> &SimConfig {
        &self.sim
    }

    pub fn gains(&self) -> &ControllerGains {
        &self.gains
    }

    pub fn set_auto_reset(&mut self, on: bool) {
        self.cfg.auto_reset = on;
    }

    pub fn is_reset(&self) -> bool {
        !self.agents.is_empty()
    }

    /// Scene the agent currently flies in.
    ///
    /// # Panics
    /// Before the first reset.
    pub fn scene(&self, agent: usize) -> &Scene {
        &self.scenes[self.agents[agent].scene]
    }

    pub fn scene_index(&self, agent: usize) -> usize {
        self.agents[agent].scene
    }

    pub fn state(&self, agent: usize) -> &QuadState {
        &self.agents[agent].state
    }

    pub fn target(&self, agent: usize) -> &Vec3 {
        &self.agents[agent].target
    }

    /// Agent finished its episode and has not been respawned yet.
    pub fn is_done(&self, agent: usize) -> bool {
        self.agents[agent].done
    }

    pub fn episode_step(&self, agent: usize) -> usize {
        self.agents[agent].episode_step
    }

    /// Most recent observation of `agent`.
    pub fn observation(&self, agent: usize) -> Option<&Observation> {
        self.agents[agent].last.as_ref().map(|o| &o.observation)
    }

    /// Start recording [`LogRecord`]s (cleared on every call).
    pub fn enable_log(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn take_log(&mut self) -> Vec<LogRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Reset every agent with seeds derived from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<Observation>, EnvError> {
        let seeds: Vec<u64> = (0..self.cfg.num_agents).map(|i| agent_seed(seed, i)).collect();
        self.reset_with_seeds(seed, &seeds)
    }

    /// Reset with an explicit seed per agent. `scene_seed` drives scene
    /// generation and shuffling; each agent's spawn, noise and respawns use
    /// only its own seed, so in parallel mode an agent behaves exactly like
    /// a single-agent environment reset with the same two seeds.
    pub fn reset_with_seeds(&mut self, scene_seed: u64, agent_seeds: &[u64]) -> Result<Vec<Observation>, EnvError> {
        let n = self.cfg.num_agents;
        if agent_seeds.len() != n {
            return Err(EnvError::ActionShapeMismatch {
                expected: n,
                got: agent_seeds.len(),
            });
        }
        self.scenes = self
            .cfg
            .scenes
            .iter()
            .enumerate()
            .map(|(k, src)| match &self.cached[k] {
                Some(s) => Ok(Arc::clone(s)),
                None => build_scene(src, splitmix64(scene_seed ^ splitmix64(k as u64 + 1))).map(Arc::new),
            })
            .collect::<Result<_, _>>()?;
        self.scene_rng = ChaCha8Rng::seed_from_u64(splitmix64(scene_seed));
        self.scene_queue.clear();
        self.step_index = 0;
        if let Some(log) = &mut self.log {
            log.clear();
        }
        let mut agents = Vec::with_capacity(n);
        let mut placed = Vec::with_capacity(n);
        for (i, &seed) in agent_seeds.iter().enumerate() {
            let scene = self.next_scene();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (state, target) = self.spawn(i, scene, &mut rng, &placed)?;
            placed.push(state.position);
            agents.push(Agent {
                rng,
                state,
                target,
                scene,
                episode_step: 0,
                done: false,
                last: None,
            });
        }
        self.agents = agents;
        let all: Vec<usize> = (0..n).collect();
        self.evaluate_resets(&all)?;
        Ok(self.agents.iter().map(|a| a.last.as_ref().unwrap().observation.clone()).collect())
    }

    fn next_scene(&mut self) -> usize {
        if self.cfg.mode == AgentMode::Swarm {
            return 0;
        }
        if self.scene_queue.is_empty() {
            let mut order: Vec<usize> = (0..self.cfg.scenes.len()).collect();
            if self.cfg.scene_sampling == SceneSampling::Shuffled {
                order.shuffle(&mut self.scene_rng);
            }
            self.scene_queue.extend(order);
        }
        self.scene_queue.pop_front().expect("refilled")
    }

    /// Sample an initial state with clearance from obstacles (and, in swarm
    /// mode, from the already placed agents) and the agent's target.
    fn spawn(&self, i: usize, scene: usize, rng: &mut ChaCha8Rng, others: &[Vec3]) -> Result<(QuadState, Vec3), EnvError> {
        let scene = &*self.scenes[scene];
        let r = &self.cfg.randomization;
        let offset = self.task.spawn_offset(i);
        let min_sep = 2.0 * self.cfg.drone_radius + self.cfg.min_spawn_clearance;
        let swarm = self.cfg.mode == AgentMode::Swarm;
        for _ in 0..MAX_SPAWN_ATTEMPTS {
            let p = r.position.sample(rng) + offset;
            let clear_of_scene = match scene.nearest_point(&p) {
                Ok(n) => n.distance >= self.cfg.min_spawn_clearance && !scene.inside_solid(&p),
                Err(_) => true,
            };
            let clear_of_agents = !swarm || others.iter().all(|o| (o - p).norm() >= min_sep);
            if !(clear_of_scene && clear_of_agents) {
                continue;
            }
            let velocity = r.velocity.sample(rng);
            let rpy = r.orientation.sample(rng);
            let angvel = r.angular_velocity.sample(rng);
            let state = QuadState {
                position: p,
                velocity,
                orientation: *UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z).quaternion(),
                angvel,
                rotor_speeds: Vec4::repeat(self.params.hover_speed()),
            };
            let target = self
                .task
                .sample_target(i, &state, scene, rng)
                .ok_or(EnvError::NoTarget { agent: i })?;
            return Ok((state, target));
        }
        Err(EnvError::SpawnFailure {
            agent: i,
            attempts: MAX_SPAWN_ATTEMPTS,
        })
    }

    fn live_mask(&self) -> Vec<bool> {
        self.agents.iter().map(|a| !a.done).collect()
    }

    /// Observations for freshly spawned agents.
    fn evaluate_resets(&mut self, which: &[usize]) -> Result<(), EnvError> {
        let states: Vec<QuadState> = self.agents.iter().map(|a| a.state).collect();
        let live = self.live_mask();
        let world = World {
            cfg: &self.cfg,
            task: &*self.task,
            params: &self.params,
            sim: &self.sim,
            scenes: &self.scenes,
            states: &states,
            live: &live,
        };
        for &i in which {
            let agent = &mut self.agents[i];
            let (outcome, _) = world.evaluate(i, agent, &states[i], None, false, false, false, true)?;
            agent.last = Some(outcome);
        }
        if let Some(log) = &mut self.log {
            for &i in which {
                let a = &self.agents[i];
                log.push(LogRecord {
                    step: self.step_index,
                    agent: i,
                    state: a.state.to_array13(),
                    action: None,
                    reward: 0.0,
                    flags: flags(a.last.as_ref().unwrap()),
                });
            }
        }
        Ok(())
    }

    /// Respawn one agent in place.
    fn respawn(&mut self, i: usize, placed: &[Vec3]) -> Result<(), EnvError> {
        let scene = self.next_scene();
        let mut rng = self.agents[i].rng.clone();
        let (state, target) = self.spawn(i, scene, &mut rng, placed)?;
        let a = &mut self.agents[i];
        a.rng = rng;
        a.state = state;
        a.target = target;
        a.scene = scene;
        a.episode_step = 0;
        a.done = false;
        Ok(())
    }

    /// Step with flat actions (`4 * num_agents` values interpreted through
    /// the configured command type).
    pub fn step_flat(&mut self, actions: &[f64]) -> Result<StepResult, EnvError> {
        let n = self.cfg.num_agents;
        if actions.len() != 4 * n {
            return Err(EnvError::ActionShapeMismatch {
                expected: 4 * n,
                got: actions.len(),
            });
        }
        let kind = self.cfg.command_type;
        let cmds: Vec<Command> = actions
            .chunks_exact(4)
            .map(|c| Command::from_flat(kind, [c[0], c[1], c[2], c[3]]))
            .collect();
        self.step(&cmds)
    }

    /// Advance every agent by one control period.
    pub fn step(&mut self, actions: &[Command]) -> Result<StepResult, EnvError> {
        if self.agents.is_empty() {
            return Err(EnvError::NotReset);
        }
        let n = self.cfg.num_agents;
        if actions.len() != n {
            return Err(EnvError::ActionShapeMismatch {
                expected: n,
                got: actions.len(),
            });
        }
        for (agent, c) in actions.iter().enumerate() {
            c.validate().map_err(|source| EnvError::InvalidCommand { agent, source })?;
        }
        self.step_index += 1;

        // respawns requested by the previous step
        let mut reset = vec![false; n];
        if self.cfg.auto_reset {
            let swarm = self.cfg.mode == AgentMode::Swarm;
            if swarm && self.agents.iter().all(|a| a.done) {
                let mut placed = Vec::with_capacity(n);
                for i in 0..n {
                    self.respawn(i, &placed)?;
                    placed.push(self.agents[i].state.position);
                    reset[i] = true;
                }
            } else if !swarm {
                for i in 0..n {
                    if self.agents[i].done {
                        self.respawn(i, &[])?;
                        reset[i] = true;
                    }
                }
            }
        }
        let moving: Vec<bool> = (0..n).map(|i| !self.agents[i].done && !reset[i]).collect();

        // controllers and physics
        let previous: Vec<QuadState> = self.agents.iter().map(|a| a.state).collect();
        let (params, sim, gains) = (&self.params, &self.sim, &self.gains);
        let physics: Vec<(bool, bool)> = self
            .agents
            .par_iter_mut()
            .with_min_len(16)
            .zip(actions.par_iter())
            .zip(moving.par_iter())
            .map(|((a, cmd), &mv)| {
                if !mv {
                    return (false, false);
                }
                let rotor = command_to_rotor_speeds(cmd, &a.state, gains, params);
                match step(&a.state, &rotor.speeds, sim, params) {
                    Ok(next) => {
                        a.state = next;
                        (false, rotor.saturated)
                    }
                    Err(_) => (true, rotor.saturated),
                }
            })
            .collect();

        // agent-agent contact
        let live = self.live_mask();
        let mut contact = vec![false; n];
        if self.cfg.mode == AgentMode::Swarm {
            let d2 = (2.0 * self.cfg.drone_radius).powi(2);
            for i in 0..n {
                for j in i + 1..n {
                    if live[i]
                        && live[j]
                        && (self.agents[i].state.position - self.agents[j].state.position).norm_squared() < d2
                    {
                        contact[i] = true;
                        contact[j] = true;
                    }
                }
            }
        }

        for (i, a) in self.agents.iter_mut().enumerate() {
            if moving[i] {
                a.episode_step += 1;
            }
        }

        // sensors, flags, hooks
        let states: Vec<QuadState> = self.agents.iter().map(|a| a.state).collect();
        let world = World {
            cfg: &self.cfg,
            task: &*self.task,
            params: &self.params,
            sim: &self.sim,
            scenes: &self.scenes,
            states: &states,
            live: &live,
        };
        let rewards: Vec<f64> = self
            .agents
            .par_iter_mut()
            .with_min_len(4)
            .enumerate()
            .map(|(i, a)| -> Result<f64, NoiseError> {
                if moving[i] || reset[i] {
                    let cmd = if reset[i] { None } else { Some(&actions[i]) };
                    let (outcome, reward) = world.evaluate(
                        i,
                        a,
                        &previous[i],
                        cmd,
                        contact[i],
                        physics[i].0,
                        physics[i].1,
                        reset[i],
                    )?;
                    a.done = outcome.terminated || outcome.truncated;
                    a.last = Some(outcome);
                    Ok(reward)
                } else {
                    // waiting: repeat the final outcome, marked inactive
                    let last = a.last.as_mut().expect("evaluated at reset");
                    last.info.active = false;
                    last.info.reset = false;
                    Ok(0.0)
                }
            })
            .collect::<Result<_, _>>()?;

        let mut result = StepResult {
            observations: Vec::with_capacity(n),
            rewards,
            terminated: Vec::with_capacity(n),
            truncated: Vec::with_capacity(n),
            infos: Vec::with_capacity(n),
        };
        for a in &self.agents {
            let o = a.last.as_ref().unwrap();
            result.observations.push(o.observation.clone());
            result.terminated.push(o.terminated);
            result.truncated.push(o.truncated);
            result.infos.push(o.info);
        }
        if let Some(log) = &mut self.log {
            for (i, a) in self.agents.iter().enumerate() {
                log.push(LogRecord {
                    step: self.step_index,
                    agent: i,
                    state: a.state.to_array13(),
                    action: (!reset[i]).then(|| actions[i].to_flat()),
                    reward: result.rewards[i],
                    flags: flags(a.last.as_ref().unwrap()),
                });
            }
        }
        Ok(result)
    }
}

fn flags(o: &Outcome) -> LogFlags {
    LogFlags {
        success: o.info.success,
        collision: o.info.collision,
        out_of_bounds: o.info.out_of_bounds,
        terminated: o.terminated,
        truncated: o.truncated,
        reset: o.info.reset,
        active: o.info.active,
    }
}
