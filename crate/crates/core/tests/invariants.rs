use eep_core::{
    eep_step, energy, moment, rk4_reference, AxialInverse, FpSettings, GaussRule, Method, Propagator, Quadratic, Rotor,
    State, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn paper_state() -> State {
    State::new(0.0, Vec3::new(0.7, 1.0, 0.1), Vec3::new(0.9, 0.5, 0.4))
}

fn unit_z() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

#[test]
fn forward_then_backward_step_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = AxialInverse::default();
    let rule = GaussRule::default();
    let fp = FpSettings::default();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let h = rng.gen_range(1e-3..1e-1);
        let eps = [1e-4, 1e-2, 1.0][rng.gen_range(0..3)];
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = rng.gen_range(0.5..2.0);
        let x = Vec3::new(rho * angle.cos(), rho * angle.sin(), rng.gen_range(-1.0..1.0));
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let s0 = State::new(0.0, x, v);
        let forward = Rotor::new(unit_z(), h, eps).unwrap();
        let backward = Rotor::new(unit_z(), -h, eps).unwrap();
        let s1 = eep_step(&s0, &forward, &p, &rule, &fp).unwrap().state;
        let back = eep_step(&s1, &backward, &p, &rule, &fp).unwrap().state;
        worst = worst.max(back.phase_distance(&s0));
        assert!(back.t.abs() <= 1e-15);
    }
    assert!(worst <= 1e-9, "{worst:e}");
}

#[test]
fn quadratic_energy_is_conserved_over_long_runs() {
    let q = Quadratic::isotropic(1.0).unwrap();
    let prop = Propagator::new(Method::Eep, unit_z(), 0.01, 0.01, &q).unwrap();
    let s0 = paper_state();
    let e0 = energy(&s0, &q).unwrap();
    let mut worst: f64 = 0.0;
    let mut previous = e0;
    for item in prop.steps(s0, 1000.0).unwrap() {
        let sample = item.unwrap();
        let e = energy(&sample.report.state, &q).unwrap();
        assert!((e - previous).abs() <= 10.0 * 1e-16 * (1.0 + e.abs()) + 4.0 * f64::EPSILON);
        previous = e;
        worst = worst.max(((e - e0) / e0).abs());
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn fixed_point_iterations_stay_small() {
    for eps in [0.01, 1e-4] {
        let prop = Propagator::new(Method::Eep, unit_z(), eps, 0.01, AxialInverse::default()).unwrap();
        let mut iters: Vec<usize> = prop
            .steps(paper_state(), 100.0)
            .unwrap()
            .map(|s| s.unwrap().report.fp_iters)
            .collect();
        iters.remove(0);
        iters.sort_unstable();
        assert!(*iters.last().unwrap() <= 50);
        assert!(iters[iters.len() / 2] <= 10);
    }
}

#[test]
fn rk4_reference_is_self_consistent() {
    let p = AxialInverse::default();
    let a = rk4_reference(&paper_state(), unit_z(), 0.05, &p, 10.0, 1e-4).unwrap();
    let b = rk4_reference(&paper_state(), unit_z(), 0.05, &p, 10.0, 5e-5).unwrap();
    assert!(a.phase_distance(&b) <= 1e-10, "{:e}", a.phase_distance(&b));
    assert_eq!(a.t, 10.0);
}

#[test]
fn eep_matches_reference_and_converges() {
    let p = AxialInverse::default();
    let reference = rk4_reference(&paper_state(), unit_z(), 0.05, &p, 10.0, 5e-5).unwrap();
    let errors: Vec<f64> = (0..4)
        .map(|i| {
            let h = 1.0 / (50.0 * 2f64.powi(i));
            let prop = Propagator::new(Method::Eep, unit_z(), 0.05, h, &p).unwrap();
            let last = prop.steps(paper_state(), 10.0).unwrap().last().unwrap().unwrap();
            (last.report.state.x - reference.x).norm()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let order = (errors[2] / errors[3]).log2();
    assert!((1.5..=2.5).contains(&order), "{order}");
}

#[test]
fn boris_and_eep_agree_in_the_small_step_limit() {
    let p = AxialInverse::default();
    let run = |method| {
        let prop = Propagator::new(method, unit_z(), 1.0, 1e-3, &p).unwrap();
        prop.steps(paper_state(), 1.0)
            .unwrap()
            .last()
            .unwrap()
            .unwrap()
            .report
            .state
    };
    assert!(run(Method::Eep).phase_distance(&run(Method::Boris)) <= 1e-6);
}

#[test]
fn moment_error_follows_the_exact_flow_without_growth() {
    let p = AxialInverse::default();
    let field = unit_z();
    let i0 = moment(paper_state().v, field).unwrap();
    let max_rel = |method, h: f64, t_end: f64, window: (f64, f64)| {
        let prop = Propagator::new(method, field, 0.01, h, &p).unwrap();
        prop.steps(paper_state(), t_end)
            .unwrap()
            .map(|s| s.unwrap().report.state)
            .filter(|s| s.t >= window.0 && s.t <= window.1)
            .map(|s| ((moment(s.v, field).unwrap() - i0) / i0).abs())
            .fold(0.0, f64::max)
    };
    let exact = max_rel(Method::Rk4, 2e-5, 100.0, (0.0, 100.0));
    let first = max_rel(Method::Eep, 0.01, 1000.0, (0.0, 500.0));
    let second = max_rel(Method::Eep, 0.01, 1000.0, (500.0, 1000.0));
    assert!((first / exact - 1.0).abs() <= 1e-2, "{first:e} vs {exact:e}");
    assert!(second <= 1.01 * first, "{second:e} vs {first:e}");
}
