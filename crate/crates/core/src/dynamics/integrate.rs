use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{rigid_derivative, rotor_lag, rotor_thrusts};
use super::state::{RigidVector, QUAT};
use super::{DynamicsError, QuadParams, QuadState};
use crate::config::ConfigError;
use crate::math::Vec4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Timing of one control step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Seconds per control step.
    pub control_dt: f64,
    /// Physics sub-steps per control step.
    pub substeps: u32,
    pub integrator: Integrator,
}

impl Default for SimConfig {
    fn default() -> Self {
        crate::config::Config::default().sim
    }
}

impl SimConfig {
    pub fn new(control_dt: f64, substeps: u32, integrator: Integrator) -> Self {
        Self {
            control_dt,
            substeps,
            integrator,
        }
    }

    #[inline]
    pub fn physics_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return Err(ConfigError::Invalid {
                field: "sim.control_dt".into(),
                reason: "must be positive".into(),
            });
        }
        if self.substeps == 0 {
            return Err(ConfigError::Invalid {
                field: "sim.substeps".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One explicit integration step of the rigid state with constant thrusts.
#[inline]
pub(crate) fn integrate_rigid(
    x: &RigidVector,
    thrusts: &Vec4,
    h: f64,
    integrator: Integrator,
    params: &QuadParams,
) -> RigidVector {
    match integrator {
        Integrator::Euler => x + rigid_derivative(x, thrusts, params) * h,
        Integrator::Rk4 => {
            let k1 = rigid_derivative(x, thrusts, params);
            let k2 = rigid_derivative(&(x + k1 * (0.5 * h)), thrusts, params);
            let k3 = rigid_derivative(&(x + k2 * (0.5 * h)), thrusts, params);
            let k4 = rigid_derivative(&(x + k3 * h), thrusts, params);
            x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        }
    }
}

#[inline]
pub(crate) fn normalize_quaternion(x: &mut RigidVector) {
    let mut q = x.fixed_rows_mut::<4>(QUAT);
    let n = q.norm();
    q /= n;
}

/// Advance one vehicle by `config.control_dt`.
///
/// Rotor commands are clamped to the speed limits. Each physics sub-step
/// first applies the rotor lag, then integrates the rigid body with the
/// resulting thrusts held constant, then renormalizes the quaternion.
pub fn step(
    state: &QuadState,
    rotor_speed_commands: &Vec4,
    config: &SimConfig,
    params: &QuadParams,
) -> Result<QuadState, DynamicsError> {
    let desired = params.clamp_speeds(rotor_speed_commands);
    let h = config.physics_dt();
    let mut x = state.rigid_vector();
    let mut rotors = state.rotor_speeds;
    for _ in 0..config.substeps {
        rotors = rotor_lag(&rotors, &desired, h, params);
        let thrusts = rotor_thrusts(&rotors, params);
        x = integrate_rigid(&x, &thrusts, h, config.integrator, params);
        normalize_quaternion(&mut x);
    }
    let next = QuadState::from_rigid(&x, rotors);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(DynamicsError::NonFiniteState { agents: vec![0] })
    }
}

/// Batches smaller than this run on the calling thread.
const PARALLEL_MIN_BATCH: usize = 64;

/// Advance a batch of vehicles in place.
///
/// Agents whose state turns non-finite keep their pre-step state and are
/// reported in [`DynamicsError::NonFiniteState`]; every other agent is
/// advanced normally.
pub fn step_batch(
    states: &mut [QuadState],
    rotor_speed_commands: &[Vec4],
    config: &SimConfig,
    params: &QuadParams,
) -> Result<(), DynamicsError> {
    if states.len() != rotor_speed_commands.len() {
        return Err(DynamicsError::BatchShapeMismatch {
            states: states.len(),
            commands: rotor_speed_commands.len(),
        });
    }
    let advance = |(i, (s, cmd)): (usize, (&mut QuadState, &Vec4))| match step(s, cmd, config, params) {
        Ok(next) => {
            *s = next;
            None
        }
        Err(_) => Some(i),
    };
    let failed: Vec<usize> = if states.len() >= PARALLEL_MIN_BATCH {
        states
            .par_iter_mut()
            .zip(rotor_speed_commands.par_iter())
            .enumerate()
            .filter_map(advance)
            .collect()
    } else {
        states
            .iter_mut()
            .zip(rotor_speed_commands.iter())
            .enumerate()
            .filter_map(advance)
            .collect()
    };
    if failed.is_empty() {
        Ok(())
    } else {
        Err(DynamicsError::NonFiniteState { agents: failed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hover_holds_position() {
        let p = QuadParams::default();
        let cfg = SimConfig::default();
        let start = QuadState::hovering(Vec3::new(0.0, 0.0, 2.0), &p);
        let cmd = Vec4::repeat(p.hover_speed());
        let mut s = start;
        let steps = (1.0 / cfg.control_dt).round() as usize;
        for _ in 0..steps {
            s = step(&s, &cmd, &cfg, &p).unwrap();
        }
        assert!((s.position - start.position).norm() < 1e-6);
    }

    #[test]
    fn free_fall_closed_form() {
        let p = QuadParams::default().without_drag();
        let cfg = SimConfig::new(0.01, 4, Integrator::Rk4);
        let mut s = QuadState::at_rest(Vec3::new(0.0, 0.0, 10.0));
        for _ in 0..100 {
            s = step(&s, &Vec4::zeros(), &cfg, &p).unwrap();
        }
        assert!((s.position.z - (10.0 - 4.905)).abs() < 1e-9);
        assert!((s.velocity.z + 9.81).abs() < 1e-9);
    }

    #[test]
    fn commands_are_clamped() {
        let p = QuadParams::default();
        let cfg = SimConfig::default();
        let s = QuadState::hovering(Vec3::zeros(), &p);
        let high = step(&s, &Vec4::repeat(1e9), &cfg, &p).unwrap();
        let max = step(&s, &Vec4::repeat(p.rotor_speed_limits.max), &cfg, &p).unwrap();
        assert_eq!(high, max);
        assert!(high.rotor_speeds.iter().all(|&w| w <= p.rotor_speed_limits.max));
    }

    #[test]
    fn blow_up_is_reported() {
        let p = QuadParams::default();
        let cfg = SimConfig::default();
        let mut s = QuadState::hovering(Vec3::zeros(), &p);
        s.angvel = Vec3::new(f64::NAN, 0.0, 0.0);
        assert!(matches!(
            step(&s, &Vec4::zeros(), &cfg, &p),
            Err(DynamicsError::NonFiniteState { .. })
        ));
        let mut batch = vec![QuadState::hovering(Vec3::zeros(), &p), s];
        let err = step_batch(&mut batch, &[Vec4::zeros(); 2], &cfg, &p).unwrap_err();
        assert_eq!(err, DynamicsError::NonFiniteState { agents: vec![1] });
        assert!(batch[1].angvel.x.is_nan());
    }

    #[test]
    fn batch_shape_is_checked() {
        let p = QuadParams::default();
        let mut batch = vec![QuadState::hovering(Vec3::zeros(), &p); 3];
        assert!(matches!(
            step_batch(&mut batch, &[Vec4::zeros(); 2], &SimConfig::default(), &p),
            Err(DynamicsError::BatchShapeMismatch { states: 3, commands: 2 })
        ));
    }

    fn random_state(rng: &mut ChaCha8Rng, p: &QuadParams) -> QuadState {
        let uq = UnitQuaternion::from_euler_angles(
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-3.0..3.0),
        );
        QuadState {
            position: Vec3::from_fn(|_, _| rng.gen_range(-2.0..2.0)),
            velocity: Vec3::from_fn(|_, _| rng.gen_range(-3.0..3.0)),
            orientation: *uq.quaternion(),
            angvel: Vec3::from_fn(|_, _| rng.gen_range(-2.0..2.0)),
            rotor_speeds: Vec4::from_fn(|_, _| {
                rng.gen_range(0.3..0.9) * p.rotor_speed_limits.max
            }),
        }
    }

    #[test]
    fn batch_equals_individual_steps_bitwise() {
        let p = QuadParams::default();
        let cfg = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let states: Vec<_> = (0..100).map(|_| random_state(&mut rng, &p)).collect();
        let cmds: Vec<_> = (0..100)
            .map(|_| Vec4::from_fn(|_, _| rng.gen_range(0.0..2500.0)))
            .collect();
        let mut batch = states.clone();
        step_batch(&mut batch, &cmds, &cfg, &p).unwrap();
        for i in 0..100 {
            let alone = step(&states[i], &cmds[i], &cfg, &p).unwrap();
            assert_eq!(alone, batch[i]);
        }
    }

    #[test]
    fn quaternion_stays_normalized() {
        let p = QuadParams::default();
        let cfg = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = random_state(&mut rng, &p);
        for k in 0..2000 {
            let cmd = Vec4::from_fn(|_, _| rng.gen_range(0.55..0.65) * 2500.0);
            s = step(&s, &cmd, &cfg, &p).unwrap();
            assert!((s.orientation.norm() - 1.0).abs() < 1e-6, "step {k}");
        }
    }
}
