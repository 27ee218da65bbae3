use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::command::{Command, Ctbr};
use super::mixer::{mixer, MixerOutput};
use crate::config::ConfigError;
use crate::dynamics::{rotor_thrusts, QuadParams, QuadState};
use crate::math::{vee, Vec3, Vec4};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub p: Vec3,
    pub d: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub rate_p: Vec3,
    pub attitude_p: Vec3,
    pub velocity_pd: PdGains,
    pub position_pd: PdGains,
}

impl Default for ControllerGains {
    fn default() -> Self {
        crate::config::Config::default().gains
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let all = [
            self.rate_p,
            self.attitude_p,
            self.velocity_pd.p,
            self.velocity_pd.d,
            self.position_pd.p,
            self.position_pd.d,
        ];
        if all.iter().flat_map(|v| v.iter()).any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(ConfigError::Invalid {
                field: "gains".into(),
                reason: "all gains must be finite and non-negative".into(),
            });
        }
        Ok(())
    }
}

/// Desired rotor speeds plus mixer diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotorCommand {
    pub speeds: Vec4,
    pub saturated: bool,
}

/// Output of the position/velocity loops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CtbrOutput {
    pub command: Ctbr,
    /// `a_des - g` vanished, so the current attitude was held.
    pub degenerate_attitude: bool,
}

/// Invert the thrust polynomial per rotor and clamp to the speed limits.
pub fn thrusts_to_rotor_speeds(thrusts: &Vec4, params: &QuadParams) -> Vec4 {
    let lim = params.rotor_speed_limits;
    thrusts.map(|f| {
        params
            .thrust_coeffs
            .speed_for(f)
            .unwrap_or(lim.min)
            .clamp(lim.min, lim.max)
    })
}

/// Body-rate loop: P control on rate error plus gyroscopic feed-forward,
/// then allocation and thrust inversion.
pub fn ctbr_to_rotor_speeds(
    cmd: &Ctbr,
    state: &QuadState,
    gains: &ControllerGains,
    params: &QuadParams,
) -> RotorCommand {
    let j = params.inertia_diag;
    let omega = state.angvel;
    let rate_err = cmd.body_rates - omega;
    let torque = j.component_mul(&gains.rate_p.component_mul(&rate_err))
        + omega.cross(&j.component_mul(&omega));
    let mix: MixerOutput = mixer(params.mass * cmd.collective.max(0.0), &torque, params);
    RotorCommand {
        speeds: thrusts_to_rotor_speeds(&mix.thrusts, params),
        saturated: mix.saturated,
    }
}

/// Acceleration the current rotor speeds produce (drag ignored).
fn modeled_acceleration(state: &QuadState, params: &QuadParams) -> Vec3 {
    let f = rotor_thrusts(&state.rotor_speeds, params).sum();
    state.rotation() * Vec3::new(0.0, 0.0, f / params.mass) + params.gravity
}

const DEGENERATE_THRUST: f64 = 1e-6;

/// Geometric attitude stage: turn a desired world acceleration and yaw into
/// collective thrust and body-rate setpoints.
pub fn acceleration_to_ctbr(
    accel_des: &Vec3,
    yaw: f64,
    state: &QuadState,
    gains: &ControllerGains,
    params: &QuadParams,
) -> CtbrOutput {
    let r = state.rotation();
    let body_z: Vec3 = r.column(2).into_owned();
    let thrust_vec = accel_des - params.gravity;
    let degenerate = thrust_vec.norm() < DEGENERATE_THRUST;
    let z_des = if degenerate {
        body_z
    } else {
        thrust_vec.normalize()
    };

    let heading = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let y_raw = z_des.cross(&heading);
    let y_des = if y_raw.norm() > 1e-9 {
        y_raw.normalize()
    } else {
        // Thrust axis along the heading: keep the current body y.
        let y_cur: Vec3 = r.column(1).into_owned();
        (y_cur - z_des * z_des.dot(&y_cur)).normalize()
    };
    let x_des = y_des.cross(&z_des);
    let r_des = Matrix3::from_columns(&[x_des, y_des, z_des]);

    let body_rates = if degenerate {
        Vec3::zeros()
    } else {
        let err = vee(&(r_des.transpose() * r - r.transpose() * r_des)) * 0.5;
        -gains.attitude_p.component_mul(&err)
    };
    let collective = thrust_vec.dot(&body_z).max(0.0);
    CtbrOutput {
        command: Ctbr::new(collective, body_rates),
        degenerate_attitude: degenerate,
    }
}

/// Velocity loop: `a_des = p (v_des - v) - d a_model`.
pub fn lv_to_ctbr(
    velocity: &Vec3,
    yaw: f64,
    state: &QuadState,
    gains: &ControllerGains,
    params: &QuadParams,
) -> CtbrOutput {
    let pd = &gains.velocity_pd;
    let accel = pd.p.component_mul(&(velocity - state.velocity))
        - pd.d.component_mul(&modeled_acceleration(state, params));
    acceleration_to_ctbr(&accel, yaw, state, gains, params)
}

/// Position loop feeding the velocity loop: `v_des = p (x_des - x) - d v`.
pub fn ps_to_ctbr(
    position: &Vec3,
    yaw: f64,
    state: &QuadState,
    gains: &ControllerGains,
    params: &QuadParams,
) -> CtbrOutput {
    let pd = &gains.position_pd;
    let v_des = pd.p.component_mul(&(position - state.position)) - pd.d.component_mul(&state.velocity);
    lv_to_ctbr(&v_des, yaw, state, gains, params)
}

/// Run whichever cascade stages `command` needs and return rotor speeds.
pub fn command_to_rotor_speeds(
    command: &Command,
    state: &QuadState,
    gains: &ControllerGains,
    params: &QuadParams,
) -> RotorCommand {
    match command {
        Command::Srt { thrusts } => {
            let (lo, hi) = (params.min_rotor_thrust(), params.max_rotor_thrust());
            RotorCommand {
                speeds: thrusts_to_rotor_speeds(thrusts, params),
                saturated: thrusts.iter().any(|&f| f < lo || f > hi),
            }
        }
        Command::Ctbr(c) => ctbr_to_rotor_speeds(c, state, gains, params),
        Command::Ps { position, yaw } => {
            let out = ps_to_ctbr(position, *yaw, state, gains, params);
            ctbr_to_rotor_speeds(&out.command, state, gains, params)
        }
        Command::Lv { velocity, yaw } => {
            let out = lv_to_ctbr(velocity, *yaw, state, gains, params);
            ctbr_to_rotor_speeds(&out.command, state, gains, params)
        }
    }
}
