//! Batched, differentiable quadrotor flight simulation.

pub mod bench;
pub mod config;
pub mod control;
pub mod differentiation;
pub mod dynamics;
pub mod env;
pub mod geometry;
pub mod math;
pub mod sensing;

pub use config::{Config, ConfigError};
pub use control::{Command, CommandType, ControllerGains};
pub use dynamics::{QuadParams, QuadState, SimConfig};
