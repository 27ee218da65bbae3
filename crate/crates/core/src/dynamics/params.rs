use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::math::{Vec3, Vec4};

/// Per-rotor thrust polynomial `f = k2 w^2 + k1 w + k0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrustCoeffs {
    pub k2: f64,
    pub k1: f64,
    pub k0: f64,
}

impl ThrustCoeffs {
    #[inline]
    pub fn thrust(&self, speed: f64) -> f64 {
        (self.k2 * speed + self.k1) * speed + self.k0
    }

    #[inline]
    pub fn slope(&self, speed: f64) -> f64 {
        2.0 * self.k2 * speed + self.k1
    }

    /// Positive root of `thrust(w) = f`; `None` when no real root exists.
    pub fn speed_for(&self, thrust: f64) -> Option<f64> {
        let disc = self.k1 * self.k1 - 4.0 * self.k2 * (self.k0 - thrust);
        if disc < 0.0 {
            return None;
        }
        Some((-self.k1 + disc.sqrt()) / (2.0 * self.k2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorLimits {
    pub min: f64,
    pub max: f64,
}

/// Physical constants of one vehicle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadParams {
    /// kg
    pub mass: f64,
    /// Diagonal of the body inertia tensor, kg m^2.
    pub inertia_diag: Vec3,
    /// World-frame gravity, m/s^2.
    pub gravity: Vec3,
    /// Rotor positions (moment arms) in the body frame, m.
    pub arm_positions: [Vec3; 4],
    /// +1/-1 sign of each rotor's yaw reaction torque.
    pub spin_directions: [f64; 4],
    pub thrust_coeffs: ThrustCoeffs,
    /// Yaw reaction torque per newton of rotor thrust, N m / N.
    pub yaw_torque_coeff: f64,
    /// Rotor lag rate `c`, 1/s.
    pub motor_decay: f64,
    /// kg/m^3
    pub air_density: f64,
    pub drag_coeffs: Vec3,
    /// Body-axis cross-sectional areas, m^2.
    pub cross_area: Vec3,
    /// rad/s
    pub rotor_speed_limits: RotorLimits,
}

impl Default for QuadParams {
    fn default() -> Self {
        crate::config::Config::default().quad
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, why: &str| {
            Err(ConfigError::Invalid {
                field: format!("quad.{field}"),
                reason: why.to_string(),
            })
        };
        let finite3 = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad("mass", "must be positive and finite");
        }
        if !finite3(&self.inertia_diag) || self.inertia_diag.iter().any(|&j| j <= 0.0) {
            return bad("inertia_diag", "components must be positive");
        }
        if !finite3(&self.gravity) {
            return bad("gravity", "must be finite");
        }
        if !self.arm_positions.iter().all(finite3) {
            return bad("arm_positions", "must be finite");
        }
        if self.spin_directions.iter().any(|&s| s != 1.0 && s != -1.0) {
            return bad("spin_directions", "entries must be +1 or -1");
        }
        let k = &self.thrust_coeffs;
        if !(k.k2 > 0.0) || !k.k1.is_finite() || !k.k0.is_finite() {
            return bad("thrust_coeffs", "k2 must be positive, k1/k0 finite");
        }
        if !(self.motor_decay > 0.0 && self.motor_decay.is_finite()) {
            return bad("motor_decay", "must be positive");
        }
        if !(self.air_density >= 0.0) || !self.yaw_torque_coeff.is_finite() {
            return bad("air_density", "must be non-negative");
        }
        if self.drag_coeffs.iter().any(|&c| !(c >= 0.0))
            || self.cross_area.iter().any(|&s| !(s >= 0.0))
        {
            return bad("drag_coeffs", "drag coefficients and areas must be non-negative");
        }
        let lim = &self.rotor_speed_limits;
        if !(lim.min >= 0.0 && lim.max > lim.min && lim.max.is_finite()) {
            return bad("rotor_speed_limits", "need 0 <= min < max");
        }
        Ok(())
    }

    #[inline]
    pub fn inertia_inv(&self) -> Vec3 {
        self.inertia_diag.map(|j| 1.0 / j)
    }

    /// `0.5 * rho * C_d * s` per body axis.
    #[inline]
    pub fn drag_factors(&self) -> Vec3 {
        self.drag_coeffs
            .component_mul(&self.cross_area)
            .scale(0.5 * self.air_density)
    }

    #[inline]
    pub fn clamp_speeds(&self, speeds: &Vec4) -> Vec4 {
        let lim = self.rotor_speed_limits;
        speeds.map(|w| w.clamp(lim.min, lim.max))
    }

    pub fn min_rotor_thrust(&self) -> f64 {
        self.thrust_coeffs.thrust(self.rotor_speed_limits.min)
    }

    pub fn max_rotor_thrust(&self) -> f64 {
        self.thrust_coeffs.thrust(self.rotor_speed_limits.max)
    }

    /// Rotor speed at which four equal rotors balance gravity.
    pub fn hover_speed(&self) -> f64 {
        let per_rotor = self.mass * self.gravity.norm() / 4.0;
        self.thrust_coeffs
            .speed_for(per_rotor)
            .unwrap_or(self.rotor_speed_limits.min)
    }

    /// Columns map rotor thrust to body torque: `T_i x (0, 0, 1) + s_i kappa z`.
    pub fn torque_columns(&self) -> [Vec3; 4] {
        let mut cols = [Vec3::zeros(); 4];
        for (i, col) in cols.iter_mut().enumerate() {
            let arm = &self.arm_positions[i];
            *col = Vector3::new(
                arm.y,
                -arm.x,
                self.spin_directions[i] * self.yaw_torque_coeff,
            );
        }
        cols
    }

    /// A copy with aerodynamic drag switched off.
    pub fn without_drag(&self) -> Self {
        Self {
            drag_coeffs: Vec3::zeros(),
            ..self.clone()
        }
    }
}
