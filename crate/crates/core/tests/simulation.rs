use geo_uio::central::{synthesize_centralized_uio, CentralizedObserver};
use geo_uio::distributed::synthesize_distributed;
use geo_uio::reference;
use geo_uio::sim::*;
use geo_uio::{SynthesisSettings, Vector};
use proptest::prelude::*;

fn centralized() -> (reference::CentralizedProblem, CentralizedObserver) {
    let p = reference::centralized().unwrap();
    let obs = synthesize_centralized_uio(&p.sys, &p.inputs, &SynthesisSettings::default()).unwrap();
    (p, obs)
}

#[test]
fn runs_are_bit_reproducible() {
    let (p, obs) = centralized();
    let cfg = SimConfig::new(2.0, p.x0.clone());
    let a = simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap();
    let b = simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sample_grid_follows_step_and_stride() {
    let (p, obs) = centralized();
    let mut cfg = SimConfig::new(1.0, p.x0.clone());
    cfg.dt = 0.01;
    cfg.record_stride = 10;
    let tr = simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap();
    assert_eq!(tr.len(), 11);
    assert!((tr.times[10] - 1.0).abs() < 1e-12);
    assert!(tr.times.windows(2).all(|w| (w[1] - w[0] - 0.1).abs() < 1e-12));
}

#[test]
fn starting_on_the_true_state_keeps_the_error_at_round_off() {
    let (p, obs) = centralized();
    let mut cfg = SimConfig::new(5.0, p.x0.clone());
    cfg.observer_init = ObserverInit::TrueState;
    let tr = simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap();
    let worst = tr.err_norm[0].iter().copied().fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst:e}");
}

#[test]
fn quotient_error_follows_the_matrix_exponential() {
    let (p, obs) = centralized();
    let cfg = SimConfig::new(6.0, p.x0.clone());
    let tr = simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap();
    let zeta = centralized_quotient_errors(&obs, &tr);
    for k in (0..tr.len()).step_by(500) {
        let predicted = (&obs.abar_l * tr.times[k]).exp() * &zeta[0];
        assert!((&zeta[k] - &predicted).norm() <= 1e-8 * (1.0 + zeta[0].norm()), "t = {}", tr.times[k]);
    }
}

#[test]
fn distributed_true_state_without_unknown_inputs_stays_exact() {
    let mut p = reference::distributed().unwrap();
    for j in [1, 2] {
        p.signals[j].amplitude = 0.0;
    }
    let net = synthesize_distributed(&p.sys, &p.nodes, &p.graph, &SynthesisSettings::default(), 0.0, 1.1).unwrap();
    assert_eq!(net.gamma, 0.0);
    let mut cfg = SimConfig::new(2.0, p.x0.clone());
    cfg.observer_init = ObserverInit::TrueState;
    let tr = simulate_distributed(&p.sys, &net, &p.signals, &cfg).unwrap();
    for errs in &tr.err_norm {
        assert!(errs.iter().all(|&e| e <= 1e-8));
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let (p, obs) = centralized();
    for (t_end, dt, stride) in [(0.0, 1e-3, 1), (1.0, 0.0, 1), (1.0, 2.0, 1), (1.0, 1e-3, 0)] {
        let mut cfg = SimConfig::new(t_end, p.x0.clone());
        cfg.dt = dt;
        cfg.record_stride = stride;
        assert!(simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).is_err());
    }
    let cfg = SimConfig::new(1.0, Vector::zeros(2));
    assert!(simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).is_err());
}

#[test]
fn euler_converges_at_first_order() {
    let (p, obs) = centralized();
    let run = |dt: f64, stride: usize| {
        let mut cfg = SimConfig::new(1.0, p.x0.clone());
        cfg.dt = dt;
        cfg.method = Method::Euler;
        cfg.record_stride = stride;
        simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap()
    };
    let (a, b, c) = (run(0.01, 1), run(0.005, 2), run(0.0025, 4));
    let d1 = (a.x.last().unwrap() - b.x.last().unwrap()).norm();
    let d2 = (b.x.last().unwrap() - c.x.last().unwrap()).norm();
    let ratio = d1 / d2;
    assert!((1.6..2.5).contains(&ratio), "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The quotient error ignores the unknown input entirely.
    #[test]
    fn unknown_input_does_not_reach_the_quotient_error(amp in -5.0..5.0f64, freq in 0.1..5.0f64, phase in 0.0..6.3f64) {
        let (p, obs) = centralized();
        let cfg = SimConfig::new(3.0, p.x0.clone());
        let mut other = p.signals.clone();
        other[1] = SignalSpec::new(SignalKind::Sin, amp, freq, phase);
        let a = simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap();
        let b = simulate_centralized(&p.sys, &p.inputs, &obs, &other, &cfg).unwrap();
        let za = centralized_quotient_errors(&obs, &a);
        let zb = centralized_quotient_errors(&obs, &b);
        for (x, y) in za.iter().zip(&zb) {
            prop_assert!((x - y).norm() <= 1e-9);
        }
    }

    /// Error signals superpose: doubling the initial error doubles the
    /// quotient error.
    #[test]
    fn quotient_error_is_linear_in_the_initial_error(scale in 0.5..3.0f64) {
        let (p, obs) = centralized();
        let z_true = &obs.p_wg * &p.x0;
        let offset = Vector::from_vec(vec![1.0; obs.z_dim()]);
        let run = |s: f64| {
            let mut cfg = SimConfig::new(2.0, p.x0.clone());
            cfg.observer_init = ObserverInit::Custom(vec![&z_true + s * &offset]);
            simulate_centralized(&p.sys, &p.inputs, &obs, &p.signals, &cfg).unwrap()
        };
        let one = centralized_quotient_errors(&obs, &run(1.0));
        let many = centralized_quotient_errors(&obs, &run(scale));
        for (x, y) in one.iter().zip(&many) {
            prop_assert!((scale * x - y).norm() <= 1e-8 * (1.0 + y.norm()));
        }
    }
}
