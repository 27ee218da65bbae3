//! Analytic Jacobians of the discrete step map and reverse-mode gradients of
//! rollouts.
//!
//! Jacobians are built per physics sub-step in closed form (rigid-body
//! partials chained through the Runge-Kutta stages, rotor lag, thrust curve
//! and quaternion renormalization) and composed over the sub-steps.

mod jacobian;
mod rollout;

pub use jacobian::{
    extended_vector, from_extended, step_jacobian, step_with_jacobian, ExtActionMatrix, ExtMatrix,
    ExtVector, StepJacobian, EXT_DIM, ROTORS,
};
pub use rollout::{
    rollout_grad, rollout_loss, HoverHoldLoss, RolloutGradient, RolloutTape, TerminalPositionLoss,
    TrajectoryLoss,
};
