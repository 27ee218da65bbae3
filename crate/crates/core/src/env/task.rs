use rand_chacha::ChaCha8Rng;

use super::config::SensorSpec;
use crate::control::Command;
use crate::dynamics::QuadState;
use crate::geometry::{ProximityResult, Scene};
use crate::math::Vec3;
use crate::sensing::{DepthImage, ImuReading, SegmentationImage};

/// One rendered camera frame.
#[derive(Clone, Debug, PartialEq)]
pub enum VisionFrame {
    Depth(DepthImage),
    Segmentation(SegmentationImage),
}

/// Per-agent observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// `position, velocity, quaternion (w, x, y, z), angvel`.
    pub state: [f64; 13],
    /// Task-defined features.
    pub target: Vec<f64>,
    /// One frame per configured camera, in sensor order.
    pub vision: Vec<VisionFrame>,
    pub imu: Option<ImuReading>,
    /// States of the other agents (swarm mode only), in agent order.
    pub swarm: Vec<[f64; 13]>,
}

impl Observation {
    pub fn depth(&self) -> Option<&DepthImage> {
        self.vision.iter().find_map(|f| match f {
            VisionFrame::Depth(d) => Some(d),
            _ => None,
        })
    }

    pub fn segmentation(&self) -> Option<&SegmentationImage> {
        self.vision.iter().find_map(|f| match f {
            VisionFrame::Segmentation(s) => Some(s),
            _ => None,
        })
    }

    /// Everything concatenated: state, target, frames (row-major, ids as
    /// floats), IMU (specific force then rates), swarm states.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        out.extend_from_slice(&self.state);
        out.extend_from_slice(&self.target);
        for f in &self.vision {
            match f {
                VisionFrame::Depth(d) => out.extend_from_slice(&d.data),
                VisionFrame::Segmentation(s) => out.extend(s.data.iter().map(|&id| id as f64)),
            }
        }
        if let Some(imu) = &self.imu {
            out.extend_from_slice(imu.specific_force_b.as_slice());
            out.extend_from_slice(imu.angvel_b.as_slice());
        }
        for s in &self.swarm {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn flat_len(&self) -> usize {
        let frames: usize = self
            .vision
            .iter()
            .map(|f| match f {
                VisionFrame::Depth(d) => d.data.len(),
                VisionFrame::Segmentation(s) => s.data.len(),
            })
            .sum();
        13 + self.target.len() + frames + if self.imu.is_some() { 6 } else { 0 } + 13 * self.swarm.len()
    }
}

/// Everything a task hook may look at for one agent after a step.
pub struct AgentContext<'a> {
    pub agent: usize,
    /// Steps taken in the current episode, including this one.
    pub episode_step: usize,
    pub state: &'a QuadState,
    pub previous_state: &'a QuadState,
    /// `None` right after a reset.
    pub command: Option<&'a Command>,
    pub target: &'a Vec3,
    pub scene: &'a Scene,
    /// Nearest static obstacle; `None` in an empty scene.
    pub proximity: Option<ProximityResult>,
    /// Contact with the scene or (swarm mode) another agent.
    pub collision: bool,
    pub out_of_bounds: bool,
    pub vision: &'a [VisionFrame],
    pub imu: Option<&'a ImuReading>,
    /// Other agents' states (swarm mode only).
    pub swarm: &'a [QuadState],
    pub sensors: &'a [SensorSpec],
    pub drone_radius: f64,
    pub control_dt: f64,
}

impl AgentContext<'_> {
    /// Distance to the nearest obstacle surface, infinite in an empty scene.
    pub fn nearest_distance(&self) -> f64 {
        self.proximity.map_or(f64::INFINITY, |p| p.distance)
    }

    /// Observation with the common fields filled in and `target` features
    /// supplied by the task.
    pub fn observation(&self, target: Vec<f64>) -> Observation {
        Observation {
            state: self.state.to_array13(),
            target,
            vision: self.vision.to_vec(),
            imu: self.imu.copied(),
            swarm: self.swarm.iter().map(QuadState::to_array13).collect(),
        }
    }
}

/// Task hooks. Implementations must be pure functions of their arguments
/// (randomness only through the supplied generator).
pub trait Task: Send + Sync {
    fn name(&self) -> &str;

    /// Added to the sampled spawn position of `agent` (per-agent lanes).
    fn spawn_offset(&self, _agent: usize) -> Vec3 {
        Vec3::zeros()
    }

    /// Target for a freshly spawned agent; `None` if no valid target exists.
    fn sample_target(&self, agent: usize, spawn: &QuadState, scene: &Scene, rng: &mut ChaCha8Rng) -> Option<Vec3>;

    fn get_observation(&self, ctx: &AgentContext) -> Observation;

    fn get_reward(&self, ctx: &AgentContext) -> f64;

    fn get_success(&self, ctx: &AgentContext) -> bool;
}
