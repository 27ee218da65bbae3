//! Reverse-mode gradients of multi-step rollouts.

use crate::dynamics::{DynamicsError, QuadParams, QuadState, SimConfig, POS, VEL, ANGVEL, QUAT};
use crate::math::{Vec3, Vec4};

use super::jacobian::{step_with_jacobian, ExtVector, StepJacobian};

/// Scalar loss over a trajectory. `states[0]` is the initial state and
/// `states[k + 1]` results from `actions[k]`.
pub trait TrajectoryLoss {
    fn value(&self, states: &[QuadState], actions: &[Vec4]) -> f64;

    /// Partial derivatives with respect to every extended state (see
    /// [`extended_vector`]) and every action, treating them as independent.
    fn partials(&self, states: &[QuadState], actions: &[Vec4]) -> (Vec<ExtVector>, Vec<Vec4>);
}

/// `|p_N - target|^2` on the final position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminalPositionLoss {
    pub target: Vec3,
}

impl TrajectoryLoss for TerminalPositionLoss {
    fn value(&self, states: &[QuadState], _actions: &[Vec4]) -> f64 {
        (states.last().unwrap().position - self.target).norm_squared()
    }

    fn partials(&self, states: &[QuadState], actions: &[Vec4]) -> (Vec<ExtVector>, Vec<Vec4>) {
        let mut ds = vec![ExtVector::zeros(); states.len()];
        let e = (states.last().unwrap().position - self.target) * 2.0;
        ds.last_mut().unwrap().fixed_rows_mut::<3>(POS).copy_from(&e);
        (ds, vec![Vec4::zeros(); actions.len()])
    }
}

/// Quadratic tracking cost for holding a position at rest, summed over
/// every state after the initial one, plus a penalty on the distance of the
/// commands from `action_ref`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoverHoldLoss {
    pub target: Vec3,
    pub w_position: f64,
    pub w_velocity: f64,
    /// Weight on the quaternion vector part (tilt and yaw away from level).
    pub w_attitude: f64,
    pub w_rates: f64,
    pub w_action: f64,
    pub action_ref: Vec4,
}

impl HoverHoldLoss {
    pub fn new(target: Vec3, params: &QuadParams) -> Self {
        Self {
            target,
            w_position: 1.0,
            w_velocity: 0.1,
            w_attitude: 1.0,
            w_rates: 0.01,
            w_action: 1e-8,
            action_ref: Vec4::repeat(params.hover_speed()),
        }
    }
}

impl TrajectoryLoss for HoverHoldLoss {
    fn value(&self, states: &[QuadState], actions: &[Vec4]) -> f64 {
        let state_cost: f64 = states[1..]
            .iter()
            .map(|s| {
                let att = s.orientation.imag();
                self.w_position * (s.position - self.target).norm_squared()
                    + self.w_velocity * s.velocity.norm_squared()
                    + self.w_attitude * att.norm_squared()
                    + self.w_rates * s.angvel.norm_squared()
            })
            .sum();
        let action_cost: f64 = actions
            .iter()
            .map(|a| self.w_action * (a - self.action_ref).norm_squared())
            .sum();
        state_cost + action_cost
    }

    fn partials(&self, states: &[QuadState], actions: &[Vec4]) -> (Vec<ExtVector>, Vec<Vec4>) {
        let mut ds = vec![ExtVector::zeros(); states.len()];
        for (g, s) in ds.iter_mut().zip(states).skip(1) {
            g.fixed_rows_mut::<3>(POS)
                .copy_from(&((s.position - self.target) * (2.0 * self.w_position)));
            g.fixed_rows_mut::<3>(VEL)
                .copy_from(&(s.velocity * (2.0 * self.w_velocity)));
            let att = s.orientation.imag() * (2.0 * self.w_attitude);
            g.fixed_rows_mut::<3>(QUAT + 1).copy_from(&att);
            g.fixed_rows_mut::<3>(ANGVEL)
                .copy_from(&(s.angvel * (2.0 * self.w_rates)));
        }
        let da = actions
            .iter()
            .map(|a| (a - self.action_ref) * (2.0 * self.w_action))
            .collect();
        (ds, da)
    }
}

/// States and per-step Jacobians of one rollout.
#[derive(Clone, Debug)]
pub struct RolloutTape {
    /// `steps + 1` states, starting with the initial one.
    pub states: Vec<QuadState>,
    pub actions: Vec<Vec4>,
    pub jacobians: Vec<StepJacobian>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutGradient {
    pub loss: f64,
    pub actions: Vec<Vec4>,
    /// With respect to the extended initial state.
    pub initial_state: ExtVector,
}

impl RolloutTape {
    pub fn record(
        initial: &QuadState,
        actions: &[Vec4],
        config: &SimConfig,
        params: &QuadParams,
    ) -> Result<Self, DynamicsError> {
        let mut states = Vec::with_capacity(actions.len() + 1);
        let mut jacobians = Vec::with_capacity(actions.len());
        states.push(*initial);
        for a in actions {
            let (next, jac) = step_with_jacobian(states.last().unwrap(), a, config, params)?;
            states.push(next);
            jacobians.push(jac);
        }
        Ok(Self {
            states,
            actions: actions.to_vec(),
            jacobians,
        })
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.jacobians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jacobians.is_empty()
    }

    pub fn final_state(&self) -> &QuadState {
        self.states.last().unwrap()
    }

    pub fn any_saturation_boundary(&self) -> bool {
        self.jacobians.iter().any(|j| j.saturation_boundary)
    }

    /// Reverse accumulation: `lambda_k = A_k^T lambda_{k+1} + dL/ds_k`.
    pub fn backward<L: TrajectoryLoss + ?Sized>(&self, loss: &L) -> RolloutGradient {
        let (ds, da) = loss.partials(&self.states, &self.actions);
        let n = self.len();
        let mut lambda = ds[n];
        let mut grad_actions = vec![Vec4::zeros(); n];
        for k in (0..n).rev() {
            let jac = &self.jacobians[k];
            grad_actions[k] = jac.extended_action.transpose() * lambda + da[k];
            lambda = jac.extended_state.transpose() * lambda + ds[k];
        }
        RolloutGradient {
            loss: loss.value(&self.states, &self.actions),
            actions: grad_actions,
            initial_state: lambda,
        }
    }
}

/// Gradient of `loss` over the rollout from `initial` under `actions`.
pub fn rollout_grad<L: TrajectoryLoss + ?Sized>(
    initial: &QuadState,
    actions: &[Vec4],
    loss: &L,
    config: &SimConfig,
    params: &QuadParams,
) -> Result<RolloutGradient, DynamicsError> {
    Ok(RolloutTape::record(initial, actions, config, params)?.backward(loss))
}

/// Loss of the rollout from `initial` (plain forward simulation).
pub fn rollout_loss<L: TrajectoryLoss + ?Sized>(
    initial: &QuadState,
    actions: &[Vec4],
    loss: &L,
    config: &SimConfig,
    params: &QuadParams,
) -> Result<f64, DynamicsError> {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(*initial);
    for a in actions {
        let next = crate::dynamics::step(states.last().unwrap(), a, config, params)?;
        states.push(next);
    }
    Ok(loss.value(&states, actions))
}

