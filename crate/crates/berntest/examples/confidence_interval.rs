//! Confidence intervals by test inversion.
//!
//! Tests a grid of sharp constant effects and keeps the ones the data
//! cannot reject: a 95% confidence interval, with the point estimate at
//! the least-rejectable effect.
//!
//! Run with: `cargo run --example confidence_interval`

use std::path::Path;

use berntest::cli::read_study_file;
use berntest::{
    inversion::invert_test, MeanDifference, ObservedStudy, RngStream, Sidedness, SupportSpec,
    TauGrid,
};
use berntest::InversionEngine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/study10.csv");
    let file = read_study_file(&data)?;
    let study = ObservedStudy::new(file.design, file.w_obs, file.y_obs)?;

    let grid = TauGrid::new(-3.0, 3.0, 0.1)?;
    let alpha = 0.05;

    for (label, support) in [
        ("nondegenerate", SupportSpec::Nondegenerate),
        ("fixed-total(6)", SupportSpec::FixedTotal(6)),
    ] {
        let result = invert_test(
            &study,
            &MeanDifference,
            &support,
            &grid,
            alpha,
            Sidedness::TwoSided,
            InversionEngine::Exact,
            RngStream::new(0),
        )?;
        println!("{label}:");
        match (result.ci_lo, result.ci_hi) {
            (Some(lo), Some(hi)) => println!("  95% CI: ({lo:.1}, {hi:.1})"),
            _ => println!("  95% CI: empty (every effect rejected)"),
        }
        println!("  point estimate: {:.2}", result.point_estimate);
        println!("  contiguous acceptance region: {}", result.contiguous);

        // The p-curve around its peak: p(tau) rises toward the point
        // estimate and falls away on both sides.
        let peak = result
            .p_curve
            .iter()
            .max_by(|a, b| a.p_value.total_cmp(&b.p_value))
            .expect("grid is non-empty");
        println!("  p-curve peak: p({:.1}) = {:.4}", peak.tau, peak.p_value);
        for tau in [-0.2, -0.1, 0.0, 2.4, 2.5] {
            let point = result
                .p_curve
                .iter()
                .find(|p| (p.tau - tau).abs() < 1e-9)
                .expect("tau lies on the grid");
            let verdict = if point.p_value > alpha { "kept" } else { "rejected" };
            println!("  p({tau:>4.1}) = {:.4}  [{verdict}]", point.p_value);
        }
        println!();
    }
    Ok(())
}
