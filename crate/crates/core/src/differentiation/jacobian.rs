//! Closed-form Jacobians of the discrete step map.

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector};

use crate::dynamics::{
    integrate_rigid, normalize_quaternion, rotor_lag, rotor_thrusts, step, DynamicsError, Integrator,
    QuadParams, QuadState, RigidVector, SimConfig, ANGVEL, POS, QUAT, RIGID_DIM, VEL,
};
use crate::math::{quat_from_wxyz, right_product_matrix, rotation_matrix, rotation_matrix_partials, skew, Vec3, Vec4};

/// Rigid state (13) followed by the four rotor speeds.
pub const EXT_DIM: usize = RIGID_DIM + 4;
/// Index of the first rotor speed in the extended state.
pub const ROTORS: usize = RIGID_DIM;

pub type ExtVector = SVector<f64, EXT_DIM>;
pub type ExtMatrix = SMatrix<f64, EXT_DIM, EXT_DIM>;
pub type ExtActionMatrix = SMatrix<f64, EXT_DIM, 4>;
type RigidMatrix = SMatrix<f64, RIGID_DIM, RIGID_DIM>;
type RigidThrustMatrix = SMatrix<f64, RIGID_DIM, 4>;

/// State as `[position, velocity, quaternion (w,x,y,z), angvel, rotor speeds]`.
pub fn extended_vector(state: &QuadState) -> ExtVector {
    let mut v = ExtVector::zeros();
    v.fixed_rows_mut::<RIGID_DIM>(0).copy_from(&state.rigid_vector());
    v.fixed_rows_mut::<4>(ROTORS).copy_from(&state.rotor_speeds);
    v
}

pub fn from_extended(v: &ExtVector) -> QuadState {
    QuadState::from_rigid(
        &v.fixed_rows::<RIGID_DIM>(0).into_owned(),
        v.fixed_rows::<4>(ROTORS).into_owned(),
    )
}

/// Jacobians of one control step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepJacobian {
    /// Rigid next state with respect to rigid current state.
    pub d_next_d_state: SMatrix<f64, RIGID_DIM, RIGID_DIM>,
    /// Rigid next state with respect to the rotor speed command.
    pub d_next_d_action: SMatrix<f64, RIGID_DIM, 4>,
    /// Full map including the rotor speeds as state.
    pub extended_state: ExtMatrix,
    pub extended_action: ExtActionMatrix,
    /// Some command or lagged rotor speed sat exactly on a limit, where the
    /// clamp has no unique derivative (identity is used).
    pub saturation_boundary: bool,
}

/// Derivative of a clamp: 1 inside, 0 strictly outside, 1 plus a flag on
/// the boundary.
#[inline]
fn clamp_slope(value: f64, lo: f64, hi: f64, boundary: &mut bool) -> f64 {
    if value > lo && value < hi {
        1.0
    } else if value < lo || value > hi {
        0.0
    } else {
        *boundary = true;
        1.0
    }
}

/// `A = df/dx` and `B = df/dthrust` of the rigid-body derivative.
fn derivative_jacobians(x: &RigidVector, thrusts: &Vec4, params: &QuadParams) -> (RigidMatrix, RigidThrustMatrix) {
    let qv: Vec4 = x.fixed_rows::<4>(QUAT).into_owned();
    let q = quat_from_wxyz(&qv);
    let v: Vec3 = x.fixed_rows::<3>(VEL).into_owned();
    let omega: Vec3 = x.fixed_rows::<3>(ANGVEL).into_owned();
    let r = rotation_matrix(&q);
    let dr = rotation_matrix_partials(&q);
    let m = params.mass;
    let k = params.drag_factors();
    let v_b = r.transpose() * v;
    let drag = crate::dynamics::drag_force(&v_b, params);
    let d = Matrix3::from_diagonal(&Vec3::from_fn(|i, _| -2.0 * k[i] * v_b[i].abs()));
    let force_b = Vec3::new(0.0, 0.0, thrusts.sum()) + drag;

    let mut a = RigidMatrix::zeros();
    a.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&Matrix3::identity());
    a.fixed_view_mut::<3, 3>(VEL, VEL).copy_from(&(r * d * r.transpose() / m));
    for j in 0..4 {
        let col = (dr[j] * force_b + r * d * dr[j].transpose() * v) / m;
        a.fixed_view_mut::<3, 1>(VEL, QUAT + j).copy_from(&col);
    }
    a.fixed_view_mut::<4, 4>(QUAT, QUAT)
        .copy_from(&(right_product_matrix(&omega) * 0.5));
    let qvec = Vec3::new(qv[1], qv[2], qv[3]);
    let mut dq_domega = SMatrix::<f64, 4, 3>::zeros();
    dq_domega.fixed_view_mut::<1, 3>(0, 0).copy_from(&(-qvec.transpose()));
    dq_domega
        .fixed_view_mut::<3, 3>(1, 0)
        .copy_from(&(Matrix3::identity() * qv[0] + skew(&qvec)));
    a.fixed_view_mut::<4, 3>(QUAT, ANGVEL).copy_from(&(dq_domega * 0.5));
    let j = Matrix3::from_diagonal(&params.inertia_diag);
    let j_inv = Matrix3::from_diagonal(&params.inertia_inv());
    let j_omega = j * omega;
    a.fixed_view_mut::<3, 3>(ANGVEL, ANGVEL)
        .copy_from(&(-j_inv * (skew(&omega) * j - skew(&j_omega))));

    let mut b = RigidThrustMatrix::zeros();
    let thrust_dir = r.column(2) / m;
    let cols = params.torque_columns();
    for i in 0..4 {
        b.fixed_view_mut::<3, 1>(VEL, i).copy_from(&thrust_dir);
        b.fixed_view_mut::<3, 1>(ANGVEL, i).copy_from(&(j_inv * cols[i]));
    }
    (a, b)
}

/// Jacobians of one integrator step (before renormalization).
fn integrator_jacobians(
    x: &RigidVector,
    thrusts: &Vec4,
    h: f64,
    integrator: Integrator,
    params: &QuadParams,
) -> (RigidMatrix, RigidThrustMatrix) {
    let eye = RigidMatrix::identity();
    match integrator {
        Integrator::Euler => {
            let (a, b) = derivative_jacobians(x, thrusts, params);
            (eye + a * h, b * h)
        }
        Integrator::Rk4 => {
            let f = |s: &RigidVector| crate::dynamics::rigid_derivative(s, thrusts, params);
            let k1 = f(x);
            let x2 = x + k1 * (0.5 * h);
            let k2 = f(&x2);
            let x3 = x + k2 * (0.5 * h);
            let k3 = f(&x3);
            let x4 = x + k3 * h;
            let (a1, b1) = derivative_jacobians(x, thrusts, params);
            let (a2, b2) = derivative_jacobians(&x2, thrusts, params);
            let (a3, b3) = derivative_jacobians(&x3, thrusts, params);
            let (a4, b4) = derivative_jacobians(&x4, thrusts, params);
            let g1 = a1;
            let h1 = b1;
            let g2 = a2 * (eye + g1 * (0.5 * h));
            let h2 = a2 * (h1 * (0.5 * h)) + b2;
            let g3 = a3 * (eye + g2 * (0.5 * h));
            let h3 = a3 * (h2 * (0.5 * h)) + b3;
            let g4 = a4 * (eye + g3 * h);
            let h4 = a4 * (h3 * h) + b4;
            (
                eye + (g1 + g2 * 2.0 + g3 * 2.0 + g4) * (h / 6.0),
                (h1 + h2 * 2.0 + h3 * 2.0 + h4) * (h / 6.0),
            )
        }
    }
}

/// Jacobian of quaternion renormalization at the pre-normalized state.
fn normalization_jacobian(x: &RigidVector) -> RigidMatrix {
    let q: Vec4 = x.fixed_rows::<4>(QUAT).into_owned();
    let n = q.norm();
    let qh = q / n;
    let mut p = RigidMatrix::identity();
    p.fixed_view_mut::<4, 4>(QUAT, QUAT)
        .copy_from(&((Matrix4::identity() - qh * qh.transpose()) / n));
    p
}

/// Runs `step` and returns its Jacobians at the same point.
pub fn step_with_jacobian(
    state: &QuadState,
    action: &Vec4,
    config: &SimConfig,
    params: &QuadParams,
) -> Result<(QuadState, StepJacobian), DynamicsError> {
    let lim = params.rotor_speed_limits;
    let mut boundary = false;
    let desired = params.clamp_speeds(action);
    let cmd_slope = Vec4::from_fn(|i, _| clamp_slope(action[i], lim.min, lim.max, &mut boundary));
    let h = config.physics_dt();
    let decay = (-params.motor_decay * h).exp();

    let mut x = state.rigid_vector();
    let mut rotors = state.rotor_speeds;
    let mut js = ExtMatrix::identity();
    let mut ja = ExtActionMatrix::zeros();
    for _ in 0..config.substeps {
        let lagged = desired + (rotors - desired) * decay;
        let lag_slope = Vec4::from_fn(|i, _| clamp_slope(lagged[i], lim.min, lim.max, &mut boundary));
        rotors = rotor_lag(&rotors, &desired, h, params);
        let thrusts = rotor_thrusts(&rotors, params);
        let (phi_x, phi_t) = integrator_jacobians(&x, &thrusts, h, config.integrator, params);
        x = integrate_rigid(&x, &thrusts, h, config.integrator, params);
        let p = normalization_jacobian(&x);
        normalize_quaternion(&mut x);

        // d rotors_next / d rotors and / d desired (diagonal)
        let d_rot = lag_slope * decay;
        let d_des = lag_slope.component_mul(&cmd_slope) * (1.0 - decay);
        let slope = rotors.map(|w| params.thrust_coeffs.slope(w));
        let rigid_t = p * phi_t;
        let mut m = ExtMatrix::zeros();
        let mut b = ExtActionMatrix::zeros();
        m.fixed_view_mut::<RIGID_DIM, RIGID_DIM>(0, 0).copy_from(&(p * phi_x));
        for i in 0..4 {
            let col = rigid_t.column(i) * slope[i];
            m.fixed_view_mut::<RIGID_DIM, 1>(0, ROTORS + i).copy_from(&(col * d_rot[i]));
            b.fixed_view_mut::<RIGID_DIM, 1>(0, i).copy_from(&(col * d_des[i]));
            m[(ROTORS + i, ROTORS + i)] = d_rot[i];
            b[(ROTORS + i, i)] = d_des[i];
        }
        js = m * js;
        ja = m * ja + b;
    }
    let next = QuadState::from_rigid(&x, rotors);
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState { agents: vec![0] });
    }
    // keep the state bit-identical with the plain forward step
    debug_assert_eq!(Ok(next), step(state, action, config, params));
    Ok((
        next,
        StepJacobian {
            d_next_d_state: js.fixed_view::<RIGID_DIM, RIGID_DIM>(0, 0).into_owned(),
            d_next_d_action: ja.fixed_view::<RIGID_DIM, 4>(0, 0).into_owned(),
            extended_state: js,
            extended_action: ja,
            saturation_boundary: boundary,
        },
    ))
}

pub fn step_jacobian(
    state: &QuadState,
    action: &Vec4,
    config: &SimConfig,
    params: &QuadParams,
) -> Result<StepJacobian, DynamicsError> {
    step_with_jacobian(state, action, config, params).map(|(_, j)| j)
}
