use serde::{Deserialize, Serialize};

use crate::dynamics::{QuadParams, QuadState, Wrench};
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuReading {
    /// Accelerometer: non-gravitational force per unit mass, body frame, m/s^2.
    pub specific_force_b: Vec3,
    /// Gyroscope, rad/s.
    pub angvel_b: Vec3,
}

/// Ideal IMU sample. `wrench` is the total body wrench (rotors plus drag).
pub fn imu_read(state: &QuadState, wrench: &Wrench, params: &QuadParams) -> ImuReading {
    ImuReading {
        specific_force_b: wrench.force_b / params.mass,
        angvel_b: state.angvel,
    }
}
