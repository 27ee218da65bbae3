//! Gym-style batched environments: reset/step over many agents with task
//! hooks, parallel and swarm modes, scene sampling, initial-state
//! randomization, the shipped tasks and scripted policies for them.

mod config;
mod drone_env;
mod policy;
mod task;
mod tasks;

pub use config::{
    AgentMode, Distribution3, EnvConfig, InitRandomization, PrimitiveSpec, SceneSampling, SceneSource, SensorSpec,
};
pub use drone_env::{
    agent_seed, AgentInfo, DroneEnv, EnvError, LogFlags, LogRecord, StepResult, MAX_SPAWN_ATTEMPTS,
};
pub use policy::{
    centroid_ground_point, evaluate, run_episode, EpisodeOutcome, EvalSummary, GapSlottedPolicy, HoverPolicy,
    LandPolicy, Policy, PolicyKind, PotentialFieldPolicy, StraightLinePolicy,
};
pub use task::{AgentContext, Observation, Task, VisionFrame};
pub use tasks::{
    centroid_feature, pad_id, GapCrossingTask, HoverTask, LandingTask, NavigationTask, TaskSpec,
};
