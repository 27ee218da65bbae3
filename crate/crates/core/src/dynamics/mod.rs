//! Quadrotor rigid-body dynamics: rotor thrust polynomial with first-order
//! speed lag, quadratic body-frame drag, thrust/torque aggregation, and
//! fixed-step Euler / RK4 integration with physics sub-stepping.

mod integrate;
mod model;
mod params;
mod state;

pub use integrate::{step, step_batch, Integrator, SimConfig};
pub(crate) use integrate::{integrate_rigid, normalize_quaternion};
pub use model::{
    aggregate_wrench, drag_force, rotor_lag, rotor_thrusts, state_derivative, total_wrench,
    StateDerivative, Wrench,
};
pub(crate) use model::rigid_derivative;
pub use params::{QuadParams, RotorLimits, ThrustCoeffs};
pub use state::{QuadState, RigidVector, ANGVEL, POS, QUAT, RIGID_DIM, VEL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    /// Integration produced NaN or infinity; the listed agents should be reset.
    #[error("state became non-finite for agent(s) {agents:?}")]
    NonFiniteState { agents: Vec<usize> },
    #[error("batch has {states} states but {commands} commands")]
    BatchShapeMismatch { states: usize, commands: usize },
}
