use nalgebra::{Matrix4, Vector4};

use crate::dynamics::QuadParams;
use crate::math::{Vec3, Vec4};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixerOutput {
    /// Per-rotor thrusts, N, within the rotor thrust limits.
    pub thrusts: Vec4,
    /// Fraction of the requested torque that was delivered (1 when feasible).
    pub torque_scale: f64,
    /// Collective force after clamping to what the rotors can produce.
    pub collective: f64,
    pub saturated: bool,
}

/// Maps per-rotor thrusts to `(collective, roll, pitch, yaw)`.
pub fn allocation_matrix(params: &QuadParams) -> Matrix4<f64> {
    let cols = params.torque_columns();
    Matrix4::from_fn(|r, c| if r == 0 { 1.0 } else { cols[c][r - 1] })
}

/// Solve for per-rotor thrusts producing `collective_force` along body z and
/// `torque_b`.
///
/// When the exact solution violates the rotor thrust limits, the collective
/// is kept (clamped only if it alone is infeasible) and the torque vector is
/// scaled down uniformly until every rotor fits.
pub fn mixer(collective_force: f64, torque_b: &Vec3, params: &QuadParams) -> MixerOutput {
    let inv = allocation_matrix(params)
        .try_inverse()
        .expect("rotor geometry must give an invertible allocation matrix");
    let (f_min, f_max) = (params.min_rotor_thrust(), params.max_rotor_thrust());

    let per_unit_collective: Vector4<f64> = inv.column(0).into_owned();
    let torque_part = inv * Vector4::new(0.0, torque_b.x, torque_b.y, torque_b.z);

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &a in per_unit_collective.iter() {
        if a > 0.0 {
            lo = lo.max(f_min / a);
            hi = hi.min(f_max / a);
        }
    }
    let collective = collective_force.clamp(lo, hi);
    let collective_part = per_unit_collective * collective;

    let mut scale: f64 = 1.0;
    for i in 0..4 {
        let (base, delta) = (collective_part[i], torque_part[i]);
        if delta > 0.0 && base + delta > f_max {
            scale = scale.min((f_max - base) / delta);
        } else if delta < 0.0 && base + delta < f_min {
            scale = scale.min((f_min - base) / delta);
        }
    }
    let scale = scale.max(0.0);
    let thrusts = (collective_part + torque_part * scale).map(|f| f.clamp(f_min, f_max));
    MixerOutput {
        thrusts,
        torque_scale: scale,
        collective,
        saturated: scale < 1.0 || collective != collective_force,
    }
}
