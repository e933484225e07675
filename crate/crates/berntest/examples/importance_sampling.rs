//! Importance sampling versus rejection sampling versus exact.
//!
//! When the conditioning event is rare, rejection sampling burns draws.
//! Importance sampling proposes uniformly over the conditioning set and
//! reweights by the design kernel — every proposal counts, at the price of
//! weight variance. This example runs all three engines on one test and
//! compares answers, errors, and work.
//!
//! Run with: `cargo run --example importance_sampling`

use std::path::Path;
use std::time::Instant;

use berntest::cli::read_study_file;
use berntest::{
    exact_p_value, importance_p_value, rejection_p_value, AcceptanceCriterion, MeanDifference,
    ObservedStudy, RejectionOptions, RngStream, SharpHypothesis, Sidedness, SupportSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/study10.csv");
    let file = read_study_file(&data)?;
    let study = ObservedStudy::new(file.design, file.w_obs, file.y_obs)?;
    let null = SharpHypothesis::sharp_null();
    let criterion = AcceptanceCriterion::total_treated(6);
    let stream = RngStream::new(7);

    let exact = exact_p_value(
        &study,
        &null,
        &MeanDifference,
        &SupportSpec::FixedTotal(6),
        Sidedness::TwoSided,
    )?;
    println!("exact conditional p: {:.5}", exact.p_value);
    println!();

    let started = Instant::now();
    let rejection = rejection_p_value(
        &study,
        &null,
        &MeanDifference,
        &criterion,
        20_000,
        Sidedness::TwoSided,
        RejectionOptions::default(),
        &mut stream.substream(1).rng(),
    )?;
    println!(
        "rejection sampling (M = 20,000 accepts): p = {:.5} ± {:.5} in {:?}",
        rejection.p_value,
        rejection.mc_standard_error.unwrap(),
        started.elapsed()
    );
    println!(
        "  acceptance rate {:.3}: about {:.0} raw draws per accept",
        rejection.acceptance_rate.unwrap(),
        1.0 / rejection.acceptance_rate.unwrap()
    );

    let started = Instant::now();
    let importance = importance_p_value(
        &study,
        &null,
        &MeanDifference,
        &criterion,
        20_000,
        Sidedness::TwoSided,
        &mut stream.substream(2).rng(),
    )?;
    println!(
        "importance sampling (M = 20,000 proposals): p = {:.5} ± {:.5} in {:?}",
        importance.p_value,
        importance.mc_standard_error.unwrap(),
        started.elapsed()
    );
    println!(
        "  effective sample size: {:.0} of {} proposals",
        importance.effective_sample_size.unwrap(),
        importance.draws_used
    );

    println!();
    println!("both Monte-Carlo answers should sit within a few SEs of exact:");
    for (name, report) in [("rejection", &rejection), ("importance", &importance)] {
        let se = report.mc_standard_error.unwrap();
        let gap = (report.p_value - exact.p_value).abs();
        println!("  {name:>10}: |p - exact| = {:.5} ({:.1} SEs)", gap, gap / se);
    }
    Ok(())
}
