use aaprox::anderson::AaConfig;
use aaprox::counterexample::{
    aa_gd_m1_step, cycle_inner, grad_f17, inner_map, inner_map_derivative, run_counterexample,
    run_guarded_counterexample, value_f17, PiecewiseQuadratic, CYCLE_OUTER, SMOOTHNESS,
    START_RANGE, STEP, STRONG_CONVEXITY,
};
use aaprox::loss::SmoothLoss;
use aaprox::pga::{run_aa_pga, CompositeProblem};
use aaprox::{Regularizer, StepKind, Termination};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn gradient_is_the_derivative_of_the_value() {
    for i in -300..=300 {
        let x = i as f64 * 0.837 + 0.01;
        let h = 1e-6;
        let fd = (value_f17(x + h) - value_f17(x - h)) / (2.0 * h);
        assert!(
            (fd - grad_f17(x)).abs() <= 1e-5 * grad_f17(x).abs().max(1.0),
            "x = {x}"
        );
    }
}

#[test]
fn curvature_bounds_hold() {
    for i in 0..2000 {
        let x = -300.0 + i as f64 * 0.3;
        let y = x + 0.77;
        let slope = (grad_f17(y) - grad_f17(x)) / (y - x);
        assert!((STRONG_CONVEXITY - 1e-12..=SMOOTHNESS + 1e-12).contains(&slope));
    }
}

#[test]
fn cycle_points_are_fixed_by_the_recursion() {
    let inner = cycle_inner();
    assert!((inner_map(inner) - inner).abs() <= 1e-10);
    assert!(inner_map_derivative(inner).abs() < 1.0);
    let cycle = [-CYCLE_OUTER, -inner, CYCLE_OUTER, inner];
    for i in 0..4 {
        let next = aa_gd_m1_step(cycle[(i + 1) % 4], cycle[i], STEP);
        let want = cycle[(i + 2) % 4];
        assert!((next - want).abs() <= 1e-9 * want.abs(), "{next} vs {want}");
    }
}

#[test]
fn engine_enters_the_four_cycle() {
    let r = run_counterexample(2.1, 50).unwrap();
    assert!(!r.diverged(), "divergence {}", r.max_divergence);
    let inner = cycle_inner();
    let [a, b, c, d] = r.limits;
    assert!((a + inner).abs() <= 1e-6 * inner);
    assert!((b - CYCLE_OUTER).abs() <= 1e-6 * CYCLE_OUTER);
    assert!((c - inner).abs() <= 1e-6 * inner);
    assert!((d + CYCLE_OUTER).abs() <= 1e-6 * CYCLE_OUTER);
}

#[test]
fn generic_driver_does_not_converge() {
    let p = CompositeProblem::from_loss(PiecewiseQuadratic, Regularizer::Zero).unwrap();
    let config = AaConfig::new(1).with_reg_scale(0.0).with_qr(false);
    let r = run_aa_pga(
        &p,
        &DVector::from_element(1, 2.1),
        STEP,
        &config,
        1e-12,
        200,
    )
    .unwrap();
    assert_eq!(r.termination, Termination::MaxIters);
    assert!(r.x[0].abs() > 10.0);
}

#[test]
fn guard_rescues_small_starts() {
    for x0 in [2.1, 10.0, 100.0] {
        let r = run_guarded_counterexample(x0, 0.0, 100).unwrap();
        assert!(r.x[0].abs() <= 1e-12, "x0 = {x0}: {}", r.x[0]);
    }
}

#[test]
fn guarded_objective_never_increases() {
    for x0 in [2.1, 10.0, 100.0, 246.0] {
        let r = run_guarded_counterexample(x0, 0.0, 100).unwrap();
        let mut prev = r.initial_objective;
        for t in &r.trace {
            assert!(t.objective <= prev);
            prev = t.objective;
        }
    }
}

#[test]
fn far_starts_fall_back_to_gradient_steps() {
    let r = run_guarded_counterexample(246.0, 0.0, 100).unwrap();
    assert_eq!(r.count(StepKind::Aa), 0);
    // Plain steps contract x + 249 by 1 - gamma / 10 per iteration.
    let expected = (246.0 + 249.0) * (1.0 - STEP / 10.0f64).powi(100) - 249.0;
    assert!((r.x[0] - expected).abs() <= 1e-9 * expected.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_covered_start_cycles(x0 in START_RANGE.0..START_RANGE.1) {
        let r = run_counterexample(x0, 40).unwrap();
        prop_assert!(r.warning.is_none());
        prop_assert!(!r.diverged());
        let inner = cycle_inner();
        prop_assert!((r.limits[1] - CYCLE_OUTER).abs() <= 1e-6 * CYCLE_OUTER);
        prop_assert!((r.limits[2] - inner).abs() <= 1e-4 * inner);
    }
}

#[test]
fn loss_reports_constants() {
    assert_eq!(PiecewiseQuadratic.smoothness(), SMOOTHNESS);
    assert_eq!(PiecewiseQuadratic.dim(), 1);
}
