//! Scripted policies used as task oracles, and an episode runner.

use serde::{Deserialize, Serialize};

use super::config::SensorSpec;
use super::drone_env::{DroneEnv, EnvError};
use crate::control::{Command, Ctbr};
use crate::math::Vec3;
use crate::sensing::{CameraModel, Pose};

/// Policies selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Constant hover thrust, zero body rates.
    Hover,
    /// Attraction to the target plus repulsion from the nearest obstacle.
    PotentialField,
    /// Descend onto the landing pad seen by the segmentation camera.
    Land,
    /// Agents take turns through the gap, one time slot each.
    GapSlotted,
    /// Straight to the target at constant speed.
    StraightLine,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Hover,
        PolicyKind::PotentialField,
        PolicyKind::Land,
        PolicyKind::GapSlotted,
        PolicyKind::StraightLine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Hover => "hover",
            PolicyKind::PotentialField => "potential_field",
            PolicyKind::Land => "land",
            PolicyKind::GapSlotted => "gap_slotted",
            PolicyKind::StraightLine => "straight_line",
        }
    }

    pub fn build(self) -> Box<dyn Policy> {
        match self {
            PolicyKind::Hover => Box::new(HoverPolicy),
            PolicyKind::PotentialField => Box::new(PotentialFieldPolicy::default()),
            PolicyKind::Land => Box::new(LandPolicy::default()),
            PolicyKind::GapSlotted => Box::new(GapSlottedPolicy::default()),
            PolicyKind::StraightLine => Box::new(StraightLinePolicy { speed: 1.5 }),
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps the environment's current state to one command per agent.
pub trait Policy {
    /// Called after every reset.
    fn reset(&mut self, _env: &DroneEnv) {}

    fn act(&mut self, env: &DroneEnv) -> Vec<Command>;
}

fn yaw_of(env: &DroneEnv, agent: usize) -> f64 {
    let r = env.state(agent).rotation();
    r[(1, 0)].atan2(r[(0, 0)])
}

fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

pub struct HoverPolicy;

impl Policy for HoverPolicy {
    fn act(&mut self, env: &DroneEnv) -> Vec<Command> {
        let g = env.params().gravity.norm();
        vec![Command::Ctbr(Ctbr::new(g, Vec3::zeros())); env.num_agents()]
    }
}

pub struct StraightLinePolicy {
    pub speed: f64,
}

impl Policy for StraightLinePolicy {
    fn act(&mut self, env: &DroneEnv) -> Vec<Command> {
        (0..env.num_agents())
            .map(|i| {
                let d = env.target(i) - env.state(i).position;
                Command::Lv {
                    velocity: clamp_norm(1.5 * d, self.speed),
                    yaw: 0.0,
                }
            })
            .collect()
    }
}

/// Velocity commands from an attractive term toward the target and a
/// repulsive term away from the nearest obstacle point, with a tangential
/// component that steers around obstacles blocking the direct line.
#[derive(Clone, Debug)]
pub struct PotentialFieldPolicy {
    pub max_speed: f64,
    /// Obstacles closer than this (surface to vehicle surface) repel, m.
    pub influence: f64,
    pub repulsion_gain: f64,
    pub tangential_gain: f64,
    /// Seconds without closing `stall_progress` meters before a detour.
    pub stall_time: f64,
    pub stall_progress: f64,
    /// Length of one detour, s.
    pub detour_time: f64,
    progress: Vec<Progress>,
}

/// Per-agent stall tracking.
#[derive(Clone, Copy, Debug)]
struct Progress {
    step: usize,
    best: f64,
    best_step: usize,
    detour_until: usize,
    detour_dir: Vec3,
    detours: usize,
}

impl Progress {
    fn fresh(step: usize) -> Self {
        Self {
            step,
            best: f64::INFINITY,
            best_step: step,
            detour_until: 0,
            detour_dir: Vec3::zeros(),
            detours: 0,
        }
    }
}

impl Default for PotentialFieldPolicy {
    fn default() -> Self {
        Self {
            max_speed: 2.0,
            influence: 1.0,
            repulsion_gain: 0.6,
            tangential_gain: 1.0,
            stall_time: 2.0,
            stall_progress: 0.25,
            detour_time: 1.5,
            progress: Vec::new(),
        }
    }
}

impl PotentialFieldPolicy {
    /// Velocity command toward the agent's target.
    pub fn velocity(&self, env: &DroneEnv, agent: usize) -> Vec3 {
        self.velocity_toward(env, agent, &env.target(agent))
    }

    pub fn velocity_toward(&self, env: &DroneEnv, agent: usize, goal: &Vec3) -> Vec3 {
        let p = env.state(agent).position;
        let to_target = goal - p;
        let dist = to_target.norm();
        let mut v = to_target * (self.max_speed / dist.max(1.0));
        let mut speed_cap = self.max_speed;
        if let Ok(near) = env.scene(agent).nearest_point(&p) {
            let clearance = (near.distance - env.env_config().drone_radius).max(0.02);
            if clearance < self.influence {
                let away = (p - near.point).try_normalize(1e-12).unwrap_or_else(Vec3::z);
                let push = self.repulsion_gain * (1.0 / clearance - 1.0 / self.influence);
                v += away * push;
                // slide around the obstacle when it blocks the way forward
                let dir = to_target / dist.max(1e-12);
                let blocking = -dir.dot(&away);
                if blocking > 0.0 {
                    let side = dir - away * dir.dot(&away);
                    let side = side
                        .try_normalize(1e-6)
                        .unwrap_or_else(|| away.cross(&Vec3::z()).try_normalize(1e-6).unwrap_or_else(Vec3::y));
                    v += side * (self.tangential_gain * blocking * (1.0 - clearance / self.influence));
                }
                speed_cap = self.max_speed * (clearance / self.influence).clamp(0.4, 1.0);
            }
        }
        clamp_norm(v, speed_cap)
    }

    /// Goal for this step: the target, or a detour point while escaping a
    /// local minimum of the field.
    fn goal(&mut self, env: &DroneEnv, agent: usize) -> Vec3 {
        let dt = env.sim_config().control_dt;
        let step = env.episode_step(agent);
        let p = env.state(agent).position;
        let target = env.target(agent);
        let dist = (target - p).norm();
        let pr = &mut self.progress[agent];
        if step < pr.step {
            *pr = Progress::fresh(step);
        }
        pr.step = step;
        if dist < pr.best - self.stall_progress {
            pr.best = dist;
            pr.best_step = step;
        }
        if step < pr.detour_until {
            return p + pr.detour_dir * 2.0;
        }
        if (step - pr.best_step) as f64 * dt > self.stall_time {
            let forward = (target - p).try_normalize(1e-9).unwrap_or_else(Vec3::x);
            let left = Vec3::z().cross(&forward).try_normalize(1e-9).unwrap_or_else(Vec3::y);
            // cycle through up, left, right, down
            pr.detour_dir = [Vec3::z(), left, -left, -Vec3::z()][pr.detours % 4];
            pr.detours += 1;
            pr.detour_until = step + (self.detour_time / dt).round() as usize;
            pr.best_step = pr.detour_until;
            pr.best = dist;
            return p + pr.detour_dir * 2.0;
        }
        *target
    }
}

impl Policy for PotentialFieldPolicy {
    fn reset(&mut self, env: &DroneEnv) {
        self.progress = vec![Progress::fresh(0); env.num_agents()];
    }

    fn act(&mut self, env: &DroneEnv) -> Vec<Command> {
        if self.progress.len() != env.num_agents() {
            self.progress = vec![Progress::fresh(0); env.num_agents()];
        }
        (0..env.num_agents())
            .map(|i| {
                let goal = self.goal(env, i);
                let d = env.target(i) - env.state(i).position;
                Command::Lv {
                    velocity: self.velocity_toward(env, i, &goal),
                    yaw: d.y.atan2(d.x),
                }
            })
            .collect()
    }
}

/// Descend-and-center from the pad's pixel centroid: the centroid ray is
/// intersected with the pad plane to estimate the pad position, the vehicle
/// centers over it, then descends at a rate proportional to its height.
#[derive(Clone, Debug)]
pub struct LandPolicy {
    pub max_horizontal_speed: f64,
    pub max_descent_speed: f64,
    /// Descent starts once the horizontal error is below this, m.
    pub center_tolerance: f64,
    estimates: Vec<Option<Vec3>>,
}

impl Default for LandPolicy {
    fn default() -> Self {
        Self {
            max_horizontal_speed: 0.8,
            max_descent_speed: 0.6,
            center_tolerance: 0.12,
            estimates: Vec::new(),
        }
    }
}

fn segmentation_camera(env: &DroneEnv) -> Option<&CameraModel> {
    env.env_config().sensors.iter().find_map(|s| match s {
        SensorSpec::Segmentation { camera, .. } => Some(camera),
        _ => None,
    })
}

/// World point where the ray through normalized image point `(u, v)` meets
/// the horizontal plane `z = plane_z`.
pub fn centroid_ground_point(camera: &CameraModel, pose: &Pose, u: f64, v: f64, plane_z: f64) -> Option<Vec3> {
    let (origin, rot) = camera.world_pose(pose);
    let f = camera.focal_px();
    let du = u * camera.width as f64 / 2.0;
    let dv = v * camera.height as f64 / 2.0;
    let dir = rot * Vec3::new(f, -du, -dv);
    if dir.z >= -1e-9 {
        return None;
    }
    let t = (plane_z - origin.z) / dir.z;
    (t > 0.0).then(|| origin + dir * t)
}

impl Policy for LandPolicy {
    fn reset(&mut self, env: &DroneEnv) {
        self.estimates = vec![None; env.num_agents()];
    }

    fn act(&mut self, env: &DroneEnv) -> Vec<Command> {
        if self.estimates.len() != env.num_agents() {
            self.estimates = vec![None; env.num_agents()];
        }
        let camera = segmentation_camera(env);
        (0..env.num_agents())
            .map(|i| {
                let state = env.state(i);
                let pad_z = env.target(i).z;
                let seen = env.observation(i).map(|o| o.target.clone()).unwrap_or_default();
                if let (Some(cam), [u, v, vis]) = (camera, seen.as_slice()) {
                    if *vis > 0.5 {
                        if let Some(p) = centroid_ground_point(cam, &Pose::from_state(state), *u, *v, pad_z) {
                            self.estimates[i] = Some(p);
                        }
                    }
                }
                let yaw = yaw_of(env, i);
                let Some(pad) = self.estimates[i] else {
                    // climb to widen the view
                    return Command::Lv {
                        velocity: Vec3::new(0.0, 0.0, 0.3),
                        yaw,
                    };
                };
                let err = Vec3::new(pad.x - state.position.x, pad.y - state.position.y, 0.0);
                let horizontal = clamp_norm(err * 1.2, self.max_horizontal_speed);
                let height = state.position.z - env.env_config().drone_radius - pad_z;
                let vz = if err.norm() < self.center_tolerance {
                    -(0.8 * height).clamp(0.04, self.max_descent_speed)
                } else {
                    0.0
                };
                Command::Lv {
                    velocity: Vec3::new(horizontal.x, horizontal.y, vz),
                    yaw,
                }
            })
            .collect()
    }
}

/// Agent `k` waits `k * slot` seconds, then flies through the gap center
/// via an entry and an exit waypoint and on to its target.
#[derive(Clone, Debug)]
pub struct GapSlottedPolicy {
    /// s
    pub slot: f64,
    pub speed: f64,
    /// Waypoint distance from the wall plane, m.
    pub approach: f64,
    /// Gap center `(y, z)`; taken from the task when it is a gap crossing.
    pub gap: Option<(f64, f64)>,
    progress: Vec<usize>,
    holds: Vec<Vec3>,
}

impl Default for GapSlottedPolicy {
    fn default() -> Self {
        Self {
            slot: 3.0,
            speed: 1.5,
            approach: 1.0,
            gap: None,
            progress: Vec::new(),
            holds: Vec::new(),
        }
    }
}

impl Policy for GapSlottedPolicy {
    fn reset(&mut self, env: &DroneEnv) {
        self.progress = vec![0; env.num_agents()];
        self.holds = (0..env.num_agents()).map(|i| env.state(i).position).collect();
    }

    fn act(&mut self, env: &DroneEnv) -> Vec<Command> {
        if self.progress.len() != env.num_agents() {
            self.reset(env);
        }
        let dt = env.sim_config().control_dt;
        (0..env.num_agents())
            .map(|i| {
                let p = env.state(i).position;
                let target = *env.target(i);
                let (gy, gz) = self.gap.unwrap_or((0.0, target.z));
                let t = env.episode_step(i) as f64 * dt;
                if t < self.slot * i as f64 {
                    return Command::Ps {
                        position: self.holds[i],
                        yaw: 0.0,
                    };
                }
                let waypoints = [
                    Vec3::new(-self.approach, gy, gz),
                    Vec3::new(self.approach, gy, gz),
                    target,
                ];
                while self.progress[i] < 2 && (waypoints[self.progress[i]] - p).norm() < 0.25 {
                    self.progress[i] += 1;
                }
                let d = waypoints[self.progress[i]] - p;
                Command::Lv {
                    velocity: clamp_norm(1.5 * d, self.speed),
                    yaw: 0.0,
                }
            })
            .collect()
    }
}

/// Outcome of one episode (auto-reset disabled for its duration).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub agent_success: Vec<bool>,
    pub agent_collision: Vec<bool>,
    /// Steps until each agent terminated or truncated.
    pub agent_steps: Vec<usize>,
}

impl EpisodeOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.agent_success.iter().all(|&s| s)
    }

    pub fn steps(&self) -> usize {
        self.agent_steps.iter().copied().max().unwrap_or(0)
    }
}

/// Run one episode from `reset(seed)` until every agent has finished.
/// `on_step` sees the environment after every step.
pub fn run_episode(
    env: &mut DroneEnv,
    policy: &mut dyn Policy,
    seed: u64,
    mut on_step: impl FnMut(&DroneEnv, &super::StepResult),
) -> Result<EpisodeOutcome, EnvError> {
    let auto = env.env_config().auto_reset;
    env.set_auto_reset(false);
    let outcome = (|| {
        env.reset(seed)?;
        policy.reset(env);
        let n = env.num_agents();
        let mut out = EpisodeOutcome {
            seed,
            agent_success: vec![false; n],
            agent_collision: vec![false; n],
            agent_steps: vec![0; n],
        };
        while (0..n).any(|i| !env.is_done(i)) {
            let actions = policy.act(env);
            let r = env.step(&actions)?;
            for i in 0..n {
                if r.infos[i].active {
                    out.agent_success[i] = r.infos[i].success;
                    out.agent_collision[i] = r.infos[i].collision;
                    out.agent_steps[i] = r.infos[i].episode_step;
                }
            }
            on_step(env, &r);
        }
        Ok(out)
    })();
    env.set_auto_reset(auto);
    outcome
}

/// Aggregate over several episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    /// Fraction of episodes in which every agent succeeded.
    pub success_rate: f64,
    /// Fraction of agent-episodes that succeeded.
    pub agent_success_rate: f64,
    pub collision_rate: f64,
    pub mean_episode_length: f64,
}

impl EvalSummary {
    pub fn from_outcomes(outcomes: &[EpisodeOutcome]) -> Self {
        let episodes = outcomes.len();
        let agents: usize = outcomes.iter().map(|o| o.agent_success.len()).sum();
        let count = |f: &dyn Fn(&EpisodeOutcome) -> usize| outcomes.iter().map(f).sum::<usize>() as f64;
        let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
        Self {
            episodes,
            success_rate: ratio(count(&|o| usize::from(o.all_succeeded())), episodes),
            agent_success_rate: ratio(count(&|o| o.agent_success.iter().filter(|&&s| s).count()), agents),
            collision_rate: ratio(count(&|o| o.agent_collision.iter().filter(|&&c| c).count()), agents),
            mean_episode_length: ratio(count(&|o| o.steps()), episodes),
        }
    }
}

/// Run one episode per seed.
pub fn evaluate(env: &mut DroneEnv, policy: &mut dyn Policy, seeds: impl IntoIterator<Item = u64>) -> Result<(EvalSummary, Vec<EpisodeOutcome>), EnvError> {
    let mut outcomes = Vec::new();
    for seed in seeds {
        outcomes.push(run_episode(env, policy, seed, |_, _| {})?);
    }
    Ok((EvalSummary::from_outcomes(&outcomes), outcomes))
}
