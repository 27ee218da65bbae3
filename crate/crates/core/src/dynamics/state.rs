use nalgebra::{Matrix3, Quaternion, SVector};

use super::QuadParams;
use crate::math::{quat_from_wxyz, quat_to_wxyz, rotation_matrix, Vec3, Vec4};

/// Dimension of the rigid-body part of the state.
pub const RIGID_DIM: usize = 13;

/// Rigid-body state as a flat vector: position (0..3), velocity (3..6),
/// quaternion `w, x, y, z` (6..10), body angular velocity (10..13).
pub type RigidVector = SVector<f64, RIGID_DIM>;

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const QUAT: usize = 6;
pub const ANGVEL: usize = 10;

/// Full kinematic and rotor state of one vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadState {
    /// World frame, m.
    pub position: Vec3,
    /// World frame, m/s.
    pub velocity: Vec3,
    /// Body-to-world rotation.
    pub orientation: Quaternion<f64>,
    /// Body frame, rad/s.
    pub angvel: Vec3,
    /// rad/s
    pub rotor_speeds: Vec4,
}

impl QuadState {
    /// At rest, level, rotors stopped.
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            orientation: Quaternion::identity(),
            angvel: Vec3::zeros(),
            rotor_speeds: Vec4::zeros(),
        }
    }

    /// Level, motionless and with rotors spinning at the hover speed.
    pub fn hovering(position: Vec3, params: &QuadParams) -> Self {
        Self {
            rotor_speeds: Vec4::repeat(params.hover_speed()),
            ..Self::at_rest(position)
        }
    }

    pub fn rigid_vector(&self) -> RigidVector {
        let mut x = RigidVector::zeros();
        x.fixed_rows_mut::<3>(POS).copy_from(&self.position);
        x.fixed_rows_mut::<3>(VEL).copy_from(&self.velocity);
        x.fixed_rows_mut::<4>(QUAT)
            .copy_from(&quat_to_wxyz(&self.orientation));
        x.fixed_rows_mut::<3>(ANGVEL).copy_from(&self.angvel);
        x
    }

    pub fn from_rigid(x: &RigidVector, rotor_speeds: Vec4) -> Self {
        Self {
            position: x.fixed_rows::<3>(POS).into_owned(),
            velocity: x.fixed_rows::<3>(VEL).into_owned(),
            orientation: quat_from_wxyz(&x.fixed_rows::<4>(QUAT).into_owned()),
            angvel: x.fixed_rows::<3>(ANGVEL).into_owned(),
            rotor_speeds,
        }
    }

    /// Body-to-world rotation matrix `R_WB`.
    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_matrix(&self.orientation)
    }

    /// Velocity expressed in the body frame.
    pub fn body_velocity(&self) -> Vec3 {
        self.rotation().transpose() * self.velocity
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.angvel.iter().all(|v| v.is_finite())
            && self.rotor_speeds.iter().all(|v| v.is_finite())
    }

    /// `position, velocity, quaternion (w, x, y, z), angvel` as a plain array.
    pub fn to_array13(&self) -> [f64; 13] {
        let x = self.rigid_vector();
        let mut out = [0.0; 13];
        out.copy_from_slice(x.as_slice());
        out
    }
}
