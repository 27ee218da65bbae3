//! Finite-difference, chain-rule and transpose-consistency checks of the
//! analytic step Jacobians and rollout gradients.

use aerogym::differentiation::{
    extended_vector, from_extended, rollout_grad, rollout_loss, step_jacobian, step_with_jacobian,
    ExtVector, HoverHoldLoss, RolloutTape, TerminalPositionLoss, TrajectoryLoss, EXT_DIM,
};
use aerogym::dynamics::{step, Integrator, QuadParams, QuadState, SimConfig, RIGID_DIM};
use aerogym::math::{Vec3, Vec4};
use nalgebra::{DMatrix, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn random_state(rng: &mut ChaCha8Rng, params: &QuadParams) -> QuadState {
    let lim = params.rotor_speed_limits;
    QuadState {
        position: Vec3::from_fn(|_, _| rng.gen_range(-3.0..3.0)),
        velocity: Vec3::from_fn(|_, _| rng.gen_range(-4.0..4.0)),
        orientation: UnitQuaternion::from_euler_angles(
            rng.gen_range(-0.8..0.8),
            rng.gen_range(-0.8..0.8),
            rng.gen_range(-3.1..3.1),
        )
        .into_inner(),
        angvel: Vec3::from_fn(|_, _| rng.gen_range(-3.0..3.0)),
        rotor_speeds: Vec4::from_fn(|_, _| rng.gen_range(0.2 * lim.max..0.9 * lim.max)),
    }
}

fn random_action(rng: &mut ChaCha8Rng, params: &QuadParams) -> Vec4 {
    let lim = params.rotor_speed_limits;
    Vec4::from_fn(|_, _| rng.gen_range(0.2 * lim.max..0.9 * lim.max))
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Central differences of the extended step map: (d/d state, d/d action).
fn fd_step(s: &QuadState, a: &Vec4, cfg: &SimConfig, p: &QuadParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let x0 = extended_vector(s);
    let f = |x: &ExtVector, a: &Vec4| extended_vector(&step(&from_extended(x), a, cfg, p).unwrap());
    let mut js = DMatrix::zeros(EXT_DIM, EXT_DIM);
    for j in 0..EXT_DIM {
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += H;
        xm[j] -= H;
        js.set_column(j, &((f(&xp, a) - f(&xm, a)) / (2.0 * H)));
    }
    let mut ja = DMatrix::zeros(EXT_DIM, 4);
    for j in 0..4 {
        let mut ap = *a;
        let mut am = *a;
        ap[j] += H;
        am[j] -= H;
        ja.set_column(j, &((f(&x0, &ap) - f(&x0, &am)) / (2.0 * H)));
    }
    (js, ja)
}

fn configs() -> Vec<SimConfig> {
    let mut out = Vec::new();
    for integrator in [Integrator::Euler, Integrator::Rk4] {
        for substeps in [1, 4] {
            out.push(SimConfig::new(0.02, substeps, integrator));
        }
    }
    out
}

#[test]
fn step_jacobian_matches_finite_differences() {
    let p = QuadParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for cfg in configs() {
        let mut worst: f64 = 0.0;
        for _ in 0..25 {
            let s = random_state(&mut rng, &p);
            let a = random_action(&mut rng, &p);
            let jac = step_jacobian(&s, &a, &cfg, &p).unwrap();
            assert!(!jac.saturation_boundary);
            let (fs, fa) = fd_step(&s, &a, &cfg, &p);
            let es = rel_err(&DMatrix::from_iterator(EXT_DIM, EXT_DIM, jac.extended_state.iter().copied()), &fs);
            let ea = rel_err(&DMatrix::from_iterator(EXT_DIM, 4, jac.extended_action.iter().copied()), &fa);
            let rigid_fd = fs.view((0, 0), (RIGID_DIM, RIGID_DIM)).into_owned();
            let er = rel_err(
                &DMatrix::from_iterator(RIGID_DIM, RIGID_DIM, jac.d_next_d_state.iter().copied()),
                &rigid_fd,
            );
            worst = worst.max(es).max(ea).max(er);
        }
        assert!(worst <= 1e-4, "{cfg:?}: worst relative error {worst:e}");
    }
}

#[test]
fn chained_steps_multiply() {
    let p = QuadParams::default();
    let cfg = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let s0 = random_state(&mut rng, &p);
        let (a0, a1) = (random_action(&mut rng, &p), random_action(&mut rng, &p));
        let (s1, j0) = step_with_jacobian(&s0, &a0, &cfg, &p).unwrap();
        let j1 = step_jacobian(&s1, &a1, &cfg, &p).unwrap();
        // same action twice equals one step of twice the length with twice
        // the sub-steps (identical physics dt)
        let cfg2 = SimConfig::new(2.0 * cfg.control_dt, 2 * cfg.substeps, cfg.integrator);
        let (t0, k0) = step_with_jacobian(&s0, &a0, &cfg, &p).unwrap();
        let k1 = step_jacobian(&t0, &a0, &cfg, &p).unwrap();
        let joint = step_jacobian(&s0, &a0, &cfg2, &p).unwrap();
        let product = k1.extended_state * k0.extended_state;
        assert!((product - joint.extended_state).amax() <= 1e-10 * product.amax());
        let product_a = k1.extended_state * k0.extended_action + k1.extended_action;
        assert!((product_a - joint.extended_action).amax() <= 1e-10 * product_a.amax());
        let product = j1.extended_state * j0.extended_state;
        // and the product agrees with differences of the two-step map
        let x0 = extended_vector(&s0);
        let two = |x: &ExtVector| {
            let s = step(&from_extended(x), &a0, &cfg, &p).unwrap();
            extended_vector(&step(&s, &a1, &cfg, &p).unwrap())
        };
        let mut fd = DMatrix::zeros(EXT_DIM, EXT_DIM);
        for j in 0..EXT_DIM {
            let (mut xp, mut xm) = (x0, x0);
            xp[j] += H;
            xm[j] -= H;
            fd.set_column(j, &((two(&xp) - two(&xm)) / (2.0 * H)));
        }
        let an = DMatrix::from_iterator(EXT_DIM, EXT_DIM, product.iter().copied());
        assert!(rel_err(&an, &fd) < 1e-4);
    }
}

#[test]
fn reverse_mode_equals_explicit_chain() {
    let p = QuadParams::default();
    let cfg = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=5 {
        let s0 = random_state(&mut rng, &p);
        let actions: Vec<Vec4> = (0..n).map(|_| random_action(&mut rng, &p)).collect();
        let loss = TerminalPositionLoss {
            target: Vec3::new(1.0, -2.0, 3.0),
        };
        let tape = RolloutTape::record(&s0, &actions, &cfg, &p).unwrap();
        let g = tape.backward(&loss);
        let (ds, _) = loss.partials(&tape.states, &tape.actions);
        let dl = ds[n];
        // forward product: d s_n / d s_0 and d s_n / d a_k
        let mut m = nalgebra::SMatrix::<f64, EXT_DIM, EXT_DIM>::identity();
        for k in 0..n {
            m = tape.jacobians[k].extended_state * m;
        }
        let explicit_init = m.transpose() * dl;
        let scale = explicit_init.amax().max(1e-12);
        assert!((g.initial_state - explicit_init).amax() <= 1e-10 * scale);
        for k in 0..n {
            let mut after = nalgebra::SMatrix::<f64, EXT_DIM, EXT_DIM>::identity();
            for i in k + 1..n {
                after = tape.jacobians[i].extended_state * after;
            }
            let ga = (after * tape.jacobians[k].extended_action).transpose() * dl;
            let scale = ga.amax().max(1e-12);
            assert!((g.actions[k] - ga).amax() <= 1e-10 * scale, "step {k} of {n}");
        }
    }
}

#[test]
fn rollout_gradient_matches_finite_differences() {
    let p = QuadParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for cfg in configs() {
        let s0 = random_state(&mut rng, &p);
        let actions: Vec<Vec4> = (0..10).map(|_| random_action(&mut rng, &p)).collect();
        let loss = TerminalPositionLoss {
            target: Vec3::new(0.5, 0.5, 2.0),
        };
        let g = rollout_grad(&s0, &actions, &loss, &cfg, &p).unwrap();
        let mut an = Vec::new();
        let mut fd = Vec::new();
        for k in 0..10 {
            for j in 0..4 {
                let mut ap = actions.clone();
                let mut am = actions.clone();
                ap[k][j] += H;
                am[k][j] -= H;
                let lp = rollout_loss(&s0, &ap, &loss, &cfg, &p).unwrap();
                let lm = rollout_loss(&s0, &am, &loss, &cfg, &p).unwrap();
                fd.push((lp - lm) / (2.0 * H));
                an.push(g.actions[k][j]);
            }
        }
        let an = DMatrix::from_vec(an.len(), 1, an);
        let fd = DMatrix::from_vec(fd.len(), 1, fd);
        let e = rel_err(&an, &fd);
        assert!(e <= 1e-3, "{cfg:?}: {e:e}");
    }
}

#[test]
fn action_free_loss_has_zero_action_gradient() {
    let p = QuadParams::default();
    let cfg = SimConfig::default();
    struct InitialHeight;
    impl TrajectoryLoss for InitialHeight {
        fn value(&self, states: &[QuadState], _: &[Vec4]) -> f64 {
            states[0].position.z
        }
        fn partials(&self, states: &[QuadState], actions: &[Vec4]) -> (Vec<ExtVector>, Vec<Vec4>) {
            let mut ds = vec![ExtVector::zeros(); states.len()];
            ds[0][2] = 1.0;
            (ds, vec![Vec4::zeros(); actions.len()])
        }
    }
    let s0 = QuadState::hovering(Vec3::new(0.0, 0.0, 1.0), &p);
    let actions = vec![Vec4::repeat(1400.0); 6];
    let g = rollout_grad(&s0, &actions, &InitialHeight, &cfg, &p).unwrap();
    assert!(g.actions.iter().all(|a| *a == Vec4::zeros()));
    assert_eq!(g.initial_state[2], 1.0);
}

#[test]
fn gradient_descent_reduces_hover_loss() {
    let p = QuadParams::default();
    let cfg = SimConfig::default();
    let target = Vec3::new(0.0, 0.0, 1.0);
    let mut s0 = QuadState::hovering(target + Vec3::new(0.3, -0.2, 0.25), &p);
    s0.velocity = Vec3::new(0.2, 0.1, -0.1);
    let loss = HoverHoldLoss::new(target, &p);
    let mut actions = vec![Vec4::repeat(p.hover_speed()); 25];
    let step_size = 2e3;
    let mut prev = f64::INFINITY;
    for it in 0..30 {
        let g = rollout_grad(&s0, &actions, &loss, &cfg, &p).unwrap();
        assert!(g.loss < prev, "iteration {it}: {} !< {prev}", g.loss);
        prev = g.loss;
        for (a, ga) in actions.iter_mut().zip(&g.actions) {
            *a -= ga * step_size;
        }
    }
}
