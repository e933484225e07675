//! The full randomization distribution, assignment by assignment.
//!
//! For small designs the null distribution of any statistic is an exact,
//! finite object: every assignment, its probability, and its statistic. This
//! example walks the nondegenerate support and summarizes the
//! distribution the tests integrate over.
//!
//! Run with: `cargo run --example enumerate_distribution`

use std::path::Path;

use berntest::cli::read_study_file;
use berntest::{
    enumerate_support, support_normalizer, MeanDifference, ObservedStudy, SupportSpec,
    TestStatistic,
};
use berntest::support::DEFAULT_ENUMERATION_LIMIT;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/study10.csv");
    let file = read_study_file(&data)?;
    let study = ObservedStudy::new(file.design.clone(), file.w_obs.clone(), file.y_obs.clone())?;
    let support = SupportSpec::Nondegenerate;

    let normalizer = support_normalizer(&file.design, &support)?;
    println!("normalizer (probability mass the support keeps): {normalizer:.8}");

    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    let mut total = 0.0;
    for w in enumerate_support(&file.design, &support, DEFAULT_ENUMERATION_LIMIT)? {
        let probability = file.design.assignment_kernel(&w) / normalizer;
        let statistic = MeanDifference.evaluate(&file.y_obs, &w);
        total += probability;
        rows.push((w.to_string(), probability, statistic));
    }
    println!("assignments enumerated: {}", rows.len());
    println!("probabilities sum to: {total:.12}");
    println!();

    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("five most probable assignments:");
    println!("  {:<12} {:>12} {:>10}", "assignment", "probability", "statistic");
    for (bits, probability, statistic) in rows.iter().take(5) {
        println!("  {bits:<12} {probability:>12.6} {statistic:>10.4}");
    }
    println!();

    // A coarse histogram of the statistic, probability-weighted: the exact
    // null distribution the two-sided test reads its tail areas from.
    let t_obs = study.observed_statistic(&MeanDifference);
    let (lo, hi) = (-3.0, 3.0);
    let bins = 12;
    let mut histogram = vec![0.0_f64; bins];
    for (_, probability, statistic) in &rows {
        let slot = (((statistic - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
        histogram[slot] += probability;
    }
    println!("null distribution of the mean difference (probability mass):");
    for (i, mass) in histogram.iter().enumerate() {
        let left = lo + (hi - lo) * i as f64 / bins as f64;
        let right = lo + (hi - lo) * (i + 1) as f64 / bins as f64;
        let bar = "#".repeat((mass * 200.0).round() as usize);
        let marker = if t_obs >= left && t_obs < right { "  <- observed" } else { "" };
        println!("  [{left:>5.2}, {right:>5.2}) {mass:>7.4} {bar}{marker}");
    }
    Ok(())
}
