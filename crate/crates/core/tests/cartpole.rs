use lapse_core::cartpole::*;
use lapse_core::PolicyKind;
use proptest::prelude::*;

fn default_calibration() -> Calibration {
    calibrate_moments(300, 7, DISTURBANCE_SIGMA, &LinearSignController::default()).unwrap()
}

/// Velocity error of a zero-force prediction after one step with disturbance
/// `d`. The dynamics are affine in the total force, so this is exact:
/// `τ d / M · (1 + m cos²α / (4M/3 − m cos²α))`.
fn velocity_error_oracle(state: &CartPoleState, d: f64) -> f64 {
    let c2 = state.alpha.cos().powi(2);
    TAU * d / TOTAL_MASS * (1.0 + POLE_MASS * c2 / (4.0 * TOTAL_MASS / 3.0 - POLE_MASS * c2))
}

proptest! {
    #[test]
    fn prediction_error_is_linear_in_disturbance(
        x in -2.0f64..2.0, xd in -1.0f64..1.0, a in -0.2f64..0.2, ad in -1.0f64..1.0,
        u in prop_oneof![Just(-10.0), Just(10.0)], d in -30.0f64..30.0,
    ) {
        let s = CartPoleState::new(x, xd, a, ad);
        let truth = dynamics_step(s, u, d);
        let pred = estimator_predict(s, u);
        prop_assert_eq!(truth.x, pred.x);
        prop_assert_eq!(truth.alpha, pred.alpha);
        prop_assert!((truth.x_dot - pred.x_dot - velocity_error_oracle(&s, d)).abs() < 1e-12);
    }

    #[test]
    fn mirrored_trajectory(
        x in -1.0f64..1.0, xd in -1.0f64..1.0, a in -0.1f64..0.1, ad in -1.0f64..1.0,
        ds in prop::collection::vec(-20.0f64..20.0, 1..100),
    ) {
        let ctl = LinearSignController::default();
        let mut s = CartPoleState::new(x, xd, a, ad);
        let mut m = -s;
        for d in ds {
            let dir = ctl.act(&s);
            s = dynamics_step(s, dir.force(), d);
            m = dynamics_step(m, dir.opposite().force(), -d);
            prop_assert_eq!(m, -s);
        }
    }
}

#[test]
fn first_order_velocity_error_from_rest() {
    // Near rest the coupling factor is 1 + m/(4M/3 - m) ≈ 1.073, so the
    // cart-only estimate τ|d|/M is within 8%.
    let d = 5.0;
    let s = CartPoleState::ZERO;
    let err = dynamics_step(s, 10.0, d).x_dot - estimator_predict(s, 10.0).x_dot;
    let cart_only = TAU * d / TOTAL_MASS;
    assert!((err / cart_only - 1.0).abs() < 0.08, "{err} vs {cart_only}");
}

#[test]
fn estimator_exact_without_disturbance() {
    let ctl = LinearSignController::default();
    let mut truth = CartPoleState::new(0.01, -0.02, 0.03, 0.01);
    let mut est = truth;
    for _ in 0..150 {
        let u = ctl.act(&est).force();
        truth = dynamics_step(truth, u, 0.0);
        est = estimator_predict(est, u);
        assert_eq!(est, truth);
    }
}

#[test]
fn controller_holds_undisturbed_pole() {
    let ctl = LinearSignController::default();
    let mut s = CartPoleState::ZERO;
    for _ in 0..MAX_STEPS {
        s = dynamics_step(s, ctl.act(&s).force(), 0.0);
        assert!(s.is_alive());
    }
}

#[test]
fn calibration_moments() {
    let ctl = LinearSignController::default();
    let cal = default_calibration();
    let m = cal.moments;
    assert!(m.a2[1] > 0.0 && m.a2[3] > 0.0);
    // explicit Euler: position and angle move with the old velocities
    assert_eq!(m.a2[0], 0.0);
    assert_eq!(m.a2[2], 0.0);
    assert!(m.w_mean.iter().all(|w| (1.0..=9.0).contains(w)));

    let quiet = calibrate_moments(50, 7, 0.0, &ctl).unwrap();
    assert_eq!(quiet.moments.a2, [0.0; 4]);

    let loud = calibrate_moments(300, 7, 2.0 * DISTURBANCE_SIGMA, &ctl).unwrap();
    let ratio = loud.moments.a2[1] / m.a2[1];
    assert!((ratio / 4.0 - 1.0).abs() <= 0.15, "ratio {ratio}");

    assert!(calibrate_moments(2, 7, DISTURBANCE_SIGMA, &ctl).is_err());

    let again = default_calibration();
    assert_eq!(again, cal);
}

#[test]
fn perfect_information_reaches_cap() {
    let cal = default_calibration();
    let config = CartPoleConfig {
        p: vec![1.0; 10],
        disturbance_sigma: 0.0,
        ..CartPoleConfig::standard(cal.moments)
    };
    for kind in PolicyKind::ALL {
        let stats = run_episodes(&config, kind, 200, 3, &LinearSignController::default()).unwrap();
        assert!(stats.steps.iter().all(|&s| s == MAX_STEPS), "{kind}");
    }
}

#[test]
fn deliveries_help() {
    let cal = default_calibration();
    let ctl = LinearSignController::default();
    let base = CartPoleConfig::standard(cal.moments);
    let never = CartPoleConfig { p: vec![0.0; 10], ..base.clone() };
    let always = CartPoleConfig { p: vec![1.0; 10], ..base.clone() };
    for kind in [PolicyKind::RoundRobin, PolicyKind::AoiIndex] {
        let a = run_episodes(&never, kind, 500, 5, &ctl).unwrap();
        let b = run_episodes(&always, kind, 500, 5, &ctl).unwrap();
        assert!(a.mean_steps() < b.mean_steps());
        assert!(a.steps.iter().all(|&s| (1..=MAX_STEPS).contains(&s)));
    }
    assert!(run_episodes(&never, PolicyKind::LapseIndex, 10, 5, &ctl).is_err());
}

#[test]
fn episodes_are_deterministic_and_counted() {
    let cal = default_calibration();
    let ctl = LinearSignController::default();
    let config = CartPoleConfig::standard(cal.moments);
    let a = run_episodes(&config, PolicyKind::ContextLapseIndex, 95, 8, &ctl).unwrap();
    let b = run_episodes(&config, PolicyKind::ContextLapseIndex, 95, 8, &ctl).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.episodes(), 100);
    assert!(a.steps.iter().all(|&s| (1..=MAX_STEPS).contains(&s)));
    assert!(a.stderr_steps() > 0.0);
}
