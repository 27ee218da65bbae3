//! Continuous-time rotor, drag and rigid-body model.

use nalgebra::Quaternion;

use super::state::{RigidVector, ANGVEL, POS, QUAT, VEL};
use super::{QuadParams, QuadState};
use crate::math::{quat_to_wxyz, rotation_matrix, right_product_matrix, Vec3, Vec4};

/// Body-frame force and torque acting on the vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wrench {
    /// Thrust plus drag, N.
    pub force_b: Vec3,
    /// N m
    pub torque_b: Vec3,
}

/// Time derivative of the rigid-body part of [`QuadState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    pub orientation: Quaternion<f64>,
    pub angvel: Vec3,
}

/// Thrust of each rotor along body +z.
#[inline]
pub fn rotor_thrusts(rotor_speeds: &Vec4, params: &QuadParams) -> Vec4 {
    rotor_speeds.map(|w| params.thrust_coeffs.thrust(w))
}

/// Exponential approach of the rotor speeds to their setpoints over `dt`,
/// clamped to the rotor limits.
#[inline]
pub fn rotor_lag(current: &Vec4, desired: &Vec4, dt: f64, params: &QuadParams) -> Vec4 {
    let decay = (-params.motor_decay * dt).exp();
    let lagged = desired + (current - desired) * decay;
    params.clamp_speeds(&lagged)
}

/// Quadratic drag in the body frame, opposing the body velocity per axis.
#[inline]
pub fn drag_force(velocity_b: &Vec3, params: &QuadParams) -> Vec3 {
    let k = params.drag_factors();
    Vec3::new(
        -k.x * velocity_b.x * velocity_b.x.abs(),
        -k.y * velocity_b.y * velocity_b.y.abs(),
        -k.z * velocity_b.z * velocity_b.z.abs(),
    )
}

/// Collective force and torque of four rotor thrusts, including the
/// per-rotor yaw reaction torque.
pub fn aggregate_wrench(thrusts: &Vec4, params: &QuadParams) -> Wrench {
    let cols = params.torque_columns();
    let mut torque = Vec3::zeros();
    for i in 0..4 {
        torque += cols[i] * thrusts[i];
    }
    Wrench {
        force_b: Vec3::new(0.0, 0.0, thrusts.sum()),
        torque_b: torque,
    }
}

/// Rotor wrench plus drag at the current velocity.
pub fn total_wrench(state: &QuadState, params: &QuadParams) -> Wrench {
    let mut w = aggregate_wrench(&rotor_thrusts(&state.rotor_speeds, params), params);
    w.force_b += drag_force(&state.body_velocity(), params);
    w
}

/// Rigid-body equations of motion for a given body wrench.
pub fn state_derivative(state: &QuadState, wrench: &Wrench, params: &QuadParams) -> StateDerivative {
    let d = wrench_derivative(&state.rigid_vector(), wrench, params);
    StateDerivative {
        position: d.fixed_rows::<3>(POS).into_owned(),
        velocity: d.fixed_rows::<3>(VEL).into_owned(),
        orientation: crate::math::quat_from_wxyz(&d.fixed_rows::<4>(QUAT).into_owned()),
        angvel: d.fixed_rows::<3>(ANGVEL).into_owned(),
    }
}

#[inline]
fn wrench_derivative(x: &RigidVector, wrench: &Wrench, params: &QuadParams) -> RigidVector {
    let q = crate::math::quat_from_wxyz(&x.fixed_rows::<4>(QUAT).into_owned());
    let omega: Vec3 = x.fixed_rows::<3>(ANGVEL).into_owned();
    let r = rotation_matrix(&q);
    let j = params.inertia_diag;
    let acc = r * wrench.force_b / params.mass + params.gravity;
    let q_dot = right_product_matrix(&omega) * quat_to_wxyz(&q) * 0.5;
    let j_omega = j.component_mul(&omega);
    let omega_dot = (wrench.torque_b - omega.cross(&j_omega)).component_div(&j);
    let mut d = RigidVector::zeros();
    d.fixed_rows_mut::<3>(POS).copy_from(&x.fixed_rows::<3>(VEL));
    d.fixed_rows_mut::<3>(VEL).copy_from(&acc);
    d.fixed_rows_mut::<4>(QUAT).copy_from(&q_dot);
    d.fixed_rows_mut::<3>(ANGVEL).copy_from(&omega_dot);
    d
}

/// Derivative of the rigid state with fixed rotor thrusts; drag is
/// re-evaluated at `x`.
#[inline]
pub(crate) fn rigid_derivative(x: &RigidVector, thrusts: &Vec4, params: &QuadParams) -> RigidVector {
    let q = crate::math::quat_from_wxyz(&x.fixed_rows::<4>(QUAT).into_owned());
    let v: Vec3 = x.fixed_rows::<3>(VEL).into_owned();
    let v_b = rotation_matrix(&q).transpose() * v;
    let mut wrench = aggregate_wrench(thrusts, params);
    wrench.force_b += drag_force(&v_b, params);
    wrench_derivative(x, &wrench, params)
}
