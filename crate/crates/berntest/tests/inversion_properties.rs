//! Test inversion on the reference ten-unit study: frozen interval
//! endpoints, point-estimate placement, p-curve boundary behavior, and
//! Monte-Carlo engines recovering the exact interval.

mod common;

use berntest::{
    invert_test, InversionEngine, InversionResult, MeanDifference, ObservedStudy,
    RejectionOptions, RngStream, Sidedness, SupportSpec, TauGrid,
};
use common::{study10_design, study10_w_obs, study10_y_obs};

fn study10() -> ObservedStudy {
    ObservedStudy::new(study10_design(), study10_w_obs(), study10_y_obs()).unwrap()
}

fn exact_inversion(support: &SupportSpec, alpha: f64) -> InversionResult {
    invert_test(
        &study10(),
        &MeanDifference,
        support,
        &TauGrid::new(-3.0, 3.0, 0.1).unwrap(),
        alpha,
        Sidedness::TwoSided,
        InversionEngine::Exact,
        RngStream::new(0),
    )
    .unwrap()
}

#[test]
fn reference_study_interval_and_point_estimate_are_stable() {
    for support in [SupportSpec::Nondegenerate, SupportSpec::FixedTotal(6)] {
        let result = exact_inversion(&support, 0.05);
        let lo = result.ci_lo.expect("interval is nonempty");
        let hi = result.ci_hi.expect("interval is nonempty");
        assert!((lo - (-0.1)).abs() < 1e-6, "{support:?}: lo {lo}");
        assert!((hi - 2.4).abs() < 1e-6, "{support:?}: hi {hi}");
        assert!((result.point_estimate - 1.1).abs() < 1e-6, "{support:?}");
        assert!(result.contiguous);
        assert_eq!(result.p_curve.len(), 61);
    }
}

#[test]
fn point_estimate_attains_the_p_curve_maximum() {
    let result = exact_inversion(&SupportSpec::Nondegenerate, 0.05);
    let best = result
        .p_curve
        .iter()
        .cloned()
        .max_by(|a, b| a.p_value.total_cmp(&b.p_value))
        .unwrap();
    assert!((best.tau - result.point_estimate).abs() < 1e-9);
    // The maximum sits strictly inside the interval, away from the grid
    // edges, and the curve decays toward both edges.
    let first = result.p_curve.first().unwrap();
    let last = result.p_curve.last().unwrap();
    assert!(best.p_value > first.p_value && best.p_value > last.p_value);
    assert!(first.p_value < 0.05 && last.p_value < 0.05);
}

#[test]
fn tighter_levels_give_wider_intervals() {
    let narrow = exact_inversion(&SupportSpec::Nondegenerate, 0.10);
    let wide = exact_inversion(&SupportSpec::Nondegenerate, 0.01);
    assert!(wide.ci_lo.unwrap() <= narrow.ci_lo.unwrap());
    assert!(wide.ci_hi.unwrap() >= narrow.ci_hi.unwrap());
    // Both contain the point estimate, which is level-free.
    assert_eq!(narrow.point_estimate, wide.point_estimate);
    assert!(narrow.ci_lo.unwrap() <= narrow.point_estimate);
    assert!(narrow.point_estimate <= narrow.ci_hi.unwrap());
}

#[test]
fn a_grid_far_from_the_data_rejects_everything() {
    let result = invert_test(
        &study10(),
        &MeanDifference,
        &SupportSpec::Nondegenerate,
        &TauGrid::new(10.0, 12.0, 0.5).unwrap(),
        0.05,
        Sidedness::TwoSided,
        InversionEngine::Exact,
        RngStream::new(0),
    )
    .unwrap();
    assert!(result.ci_lo.is_none() && result.ci_hi.is_none());
    assert_eq!(result.p_curve.len(), 5);
    assert!(result.p_curve.iter().all(|pt| pt.p_value <= 0.05));
    // The point estimate still answers "least implausible on this grid".
    assert!((10.0..=12.0).contains(&result.point_estimate));
}

#[test]
fn rejection_inversion_recovers_the_exact_interval() {
    let exact = exact_inversion(&SupportSpec::Nondegenerate, 0.05);
    let mc = invert_test(
        &study10(),
        &MeanDifference,
        &SupportSpec::Nondegenerate,
        &TauGrid::new(-3.0, 3.0, 0.1).unwrap(),
        0.05,
        Sidedness::TwoSided,
        InversionEngine::Rejection {
            m_draws: 20_000,
            options: RejectionOptions::default(),
        },
        RngStream::with_stream(505, 1),
    )
    .unwrap();
    assert_eq!(mc.ci_lo, exact.ci_lo);
    assert_eq!(mc.ci_hi, exact.ci_hi);
    assert!(mc.contiguous);
    // Pointwise, the shared-batch curve tracks the exact curve well
    // inside Monte-Carlo resolution.
    for (a, b) in mc.p_curve.iter().zip(&exact.p_curve) {
        assert!((a.tau - b.tau).abs() < 1e-12);
        assert!((a.p_value - b.p_value).abs() < 0.02, "tau {}: {} vs {}", a.tau, a.p_value, b.p_value);
    }
}

#[test]
fn importance_inversion_recovers_the_exact_interval() {
    let exact = exact_inversion(&SupportSpec::FixedTotal(6), 0.05);
    let mc = invert_test(
        &study10(),
        &MeanDifference,
        &SupportSpec::FixedTotal(6),
        &TauGrid::new(-3.0, 3.0, 0.1).unwrap(),
        0.05,
        Sidedness::TwoSided,
        InversionEngine::Importance { m_draws: 50_000 },
        RngStream::with_stream(505, 2),
    )
    .unwrap();
    assert_eq!(mc.ci_lo, exact.ci_lo);
    assert_eq!(mc.ci_hi, exact.ci_hi);
    for (a, b) in mc.p_curve.iter().zip(&exact.p_curve) {
        assert!((a.p_value - b.p_value).abs() < 0.02, "tau {}: {} vs {}", a.tau, a.p_value, b.p_value);
    }
}

#[test]
fn grid_construction_rejects_bad_parameters() {
    assert!(TauGrid::new(1.0, -1.0, 0.1).is_err());
    assert!(TauGrid::new(-1.0, 1.0, 0.0).is_err());
    assert!(TauGrid::new(-1.0, 1.0, -0.5).is_err());
    assert!(TauGrid::new(f64::NAN, 1.0, 0.1).is_err());
    let single = TauGrid::new(0.5, 0.5, 0.1).unwrap();
    assert_eq!(single.points(), vec![0.5]);
}
