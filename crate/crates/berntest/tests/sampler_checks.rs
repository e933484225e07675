//! Distributional checks for the samplers: frequencies against exact
//! probabilities at the 0.1% chi-square level.

mod common;

use std::collections::HashMap;

use berntest::support::DEFAULT_ENUMERATION_LIMIT;
use berntest::{
    bernoulli_draw, enumerate_support, rejection_sample, support_normalizer,
    AcceptanceCriterion, Assignment, DrawBudget, PropensityDesign, RngStream, SamplingError,
    SupportSpec, UniformProposal,
};
use common::{chi_square_crit_999, chi_square_statistic, study10_design, study10_w_obs};

#[test]
fn bernoulli_draw_matches_marginal_propensities() {
    let design = PropensityDesign::new(vec![0.1, 0.35, 0.5, 0.72, 0.9]).unwrap();
    let mut rng = RngStream::new(1).rng();
    let draws = 200_000;
    let mut treated_counts = vec![0u64; 5];
    for _ in 0..draws {
        let w = bernoulli_draw(&design, &mut rng);
        for (i, count) in treated_counts.iter_mut().enumerate() {
            *count += u64::from(w.treated(i));
        }
    }
    for (i, &e) in design.propensities().iter().enumerate() {
        let frequency = treated_counts[i] as f64 / draws as f64;
        let se = (e * (1.0 - e) / draws as f64).sqrt();
        assert!(
            (frequency - e).abs() < 5.0 * se,
            "unit {i}: frequency {frequency} vs propensity {e}"
        );
    }
}

#[test]
fn rejection_sampler_matches_conditional_probabilities() {
    // Small design, full pattern histogram: draws conditioned on two
    // treated must land on each qualifying assignment with its
    // renormalized kernel probability.
    let design = PropensityDesign::new(vec![0.1, 0.9, 0.4, 0.6]).unwrap();
    let criterion = AcceptanceCriterion::total_treated(2);
    let support = SupportSpec::FixedTotal(2);
    let z = support_normalizer(&design, &support).unwrap();
    let patterns: Vec<Assignment> =
        enumerate_support(&design, &support, DEFAULT_ENUMERATION_LIMIT).unwrap().collect();
    let expected: Vec<f64> =
        patterns.iter().map(|w| design.assignment_kernel(w) / z).collect();

    let mut rng = RngStream::new(2).rng();
    let sample =
        rejection_sample(&design, &criterion, DrawBudget::accepts(100_000), &mut rng).unwrap();
    let index: HashMap<String, usize> =
        patterns.iter().enumerate().map(|(i, w)| (w.to_string(), i)).collect();
    let mut observed = vec![0u64; patterns.len()];
    for w in &sample.accepts {
        observed[index[&w.to_string()]] += 1;
    }
    let statistic = chi_square_statistic(&observed, &expected);
    let crit = chi_square_crit_999(patterns.len() - 1);
    assert!(statistic < crit, "chi-square {statistic} exceeds {crit}");
}

#[test]
fn uniform_proposal_is_uniform_over_the_acceptance_set() {
    let design = study10_design();
    let w_obs = study10_w_obs();
    let criterion = AcceptanceCriterion::total_treated(6);
    let proposal = UniformProposal::new(&design, &criterion, &w_obs).unwrap();

    let support = SupportSpec::FixedTotal(6);
    let patterns: Vec<String> = enumerate_support(&design, &support, DEFAULT_ENUMERATION_LIMIT)
        .unwrap()
        .map(|w| w.to_string())
        .collect();
    let index: HashMap<&String, usize> =
        patterns.iter().enumerate().map(|(i, s)| (s, i)).collect();

    let draws = 210_000;
    let mut observed = vec![0u64; patterns.len()];
    let mut rng = RngStream::new(3).rng();
    for _ in 0..draws {
        let w = proposal.draw(&mut rng);
        observed[index[&w.to_string()]] += 1;
    }
    let expected = vec![1.0 / patterns.len() as f64; patterns.len()];
    let statistic = chi_square_statistic(&observed, &expected);
    let crit = chi_square_crit_999(patterns.len() - 1);
    assert!(statistic < crit, "chi-square {statistic} exceeds {crit}");
}

#[test]
fn uniform_proposal_with_free_units_covers_the_whole_set() {
    // Stratum constraint on the first three units only; the last two are
    // free. Every pattern with exactly one treated among the first three
    // must appear, each with probability (1/3) * (1/4).
    let mut table = berntest::CovariateTable::new();
    table
        .push_column("x_block", berntest::CovariateColumn::Numeric(vec![1.0, 1.0, 1.0, 2.0, 2.0]))
        .unwrap();
    let design =
        PropensityDesign::with_covariates(vec![0.3, 0.5, 0.7, 0.2, 0.8], table).unwrap();
    let w_obs = Assignment::from_indicators(&[1, 0, 0, 0, 1]);
    let criterion = AcceptanceCriterion::accept_all().and_stratum_treated(
        "x_block",
        berntest::CovariateValue::Numeric(1.0),
        1,
    );
    let proposal = UniformProposal::new(&design, &criterion, &w_obs).unwrap();
    let mut rng = RngStream::new(4).rng();
    let draws = 120_000;
    let mut counts: HashMap<String, u64> = HashMap::new();
    for _ in 0..draws {
        let w = proposal.draw(&mut rng);
        assert_eq!(w.n_treated_among(&[0, 1, 2]), 1);
        *counts.entry(w.to_string()).or_default() += 1;
    }
    assert_eq!(counts.len(), 12, "3 constrained patterns x 4 free patterns");
    let observed: Vec<u64> = counts.values().copied().collect();
    let expected = vec![1.0 / 12.0; 12];
    let statistic = chi_square_statistic(&observed, &expected);
    assert!(statistic < chi_square_crit_999(11));
}

#[test]
fn budget_exhaustion_reports_progress() {
    // An acceptance event so rare the tiny budget cannot reach its target.
    let design = PropensityDesign::new(vec![0.01; 8]).unwrap();
    let criterion = AcceptanceCriterion::total_treated(8);
    let mut rng = RngStream::new(5).rng();
    let result = rejection_sample(
        &design,
        &criterion,
        DrawBudget::with_max_attempts(10, 2_000),
        &mut rng,
    );
    match result {
        Err(SamplingError::BudgetExhausted { accepted, target, attempts }) => {
            assert_eq!(target, 10);
            assert_eq!(attempts, 2_000);
            assert!(accepted < 10);
        }
        other => panic!("expected budget exhaustion, got {other:?}"),
    }
}

#[test]
fn observed_assignment_must_satisfy_the_criterion() {
    let design = study10_design();
    let w_obs = study10_w_obs();
    let criterion = AcceptanceCriterion::total_treated(5); // observed has 6
    match UniformProposal::new(&design, &criterion, &w_obs) {
        Err(SamplingError::ObservedViolatesCriterion) => {}
        other => panic!("expected criterion violation, got {other:?}"),
    }
}

#[test]
fn sampling_is_reproducible_per_stream_and_distinct_across_streams() {
    let design = study10_design();
    let criterion = AcceptanceCriterion::nondegenerate();
    let draw = |stream: RngStream| {
        let mut rng = stream.rng();
        rejection_sample(&design, &criterion, DrawBudget::accepts(50), &mut rng)
            .unwrap()
            .accepts
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(RngStream::with_stream(9, 1)), draw(RngStream::with_stream(9, 1)));
    assert_ne!(draw(RngStream::with_stream(9, 1)), draw(RngStream::with_stream(9, 2)));
    assert_ne!(draw(RngStream::with_stream(9, 1)), draw(RngStream::with_stream(10, 1)));
}
