//! Sampling assignments conditional on a criterion.
//!
//! Two ways to draw from the assignment distribution restricted to an
//! acceptance set: rejection sampling (exact draws from the conditional
//! law) and the uniform proposal over the set (the importance-sampling
//! workhorse).
//!
//! Run with: `cargo run --example conditional_sampling`

use std::collections::HashMap;
use std::path::Path;

use berntest::cli::read_study_file;
use berntest::{
    bernoulli_draw, rejection_sample, AcceptanceCriterion, DrawBudget, RngStream,
    UniformProposal,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/study10.csv");
    let file = read_study_file(&data)?;
    let design = file.design;
    let stream = RngStream::new(42);

    // Unconditional draws: each unit tosses its own coin.
    let mut rng = stream.substream(0).rng();
    let mut counts = HashMap::<usize, u32>::new();
    for _ in 0..10_000 {
        *counts.entry(bernoulli_draw(&design, &mut rng).n_treated()).or_default() += 1;
    }
    println!("treated-count distribution over 10,000 unconditional draws:");
    let mut sorted: Vec<_> = counts.into_iter().collect();
    sorted.sort();
    for (k, n) in sorted {
        println!("  N_T = {k:>2}: {:>5.1}%", 100.0 * f64::from(n) / 10_000.0);
    }
    println!();

    // Conditional draws by rejection: keep only assignments with exactly
    // six treated units. The acceptance rate is the probability of that
    // event under the design.
    let criterion = AcceptanceCriterion::total_treated(6);
    let mut rng = stream.substream(1).rng();
    let sample = rejection_sample(&design, &criterion, DrawBudget::accepts(5_000), &mut rng)?;
    println!(
        "rejection sampling to N_T = 6: {} accepted in {} attempts (rate {:.4})",
        sample.accepts.len(),
        sample.attempts,
        sample.acceptance_rate
    );
    assert!(sample.accepts.iter().all(|w| w.n_treated() == 6));

    // The uniform proposal draws every six-treated assignment with equal
    // probability — not the conditional law, but covering exactly its
    // support. Importance weights (the design kernel) bridge the gap.
    let proposal = UniformProposal::new(&design, &criterion, &file.w_obs)?;
    let mut rng = stream.substream(2).rng();
    let mut kernel_range = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..5_000 {
        let w = proposal.draw(&mut rng);
        assert_eq!(w.n_treated(), 6);
        let k = design.assignment_kernel(&w);
        kernel_range = (kernel_range.0.min(k), kernel_range.1.max(k));
    }
    println!(
        "uniform proposal over the same set: kernel spread {:.2e} .. {:.2e}",
        kernel_range.0, kernel_range.1
    );
    println!("(that spread is what the importance weights flatten out)");
    Ok(())
}
