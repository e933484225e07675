//! Samplers over designs and conditioning criteria.
//!
//! Three primitives: [`bernoulli_draw`] flips each unit's biased coin;
//! [`rejection_sample`] repeats that until enough draws satisfy a criterion
//! (exact conditional sampling at the cost of discarded attempts); and
//! [`UniformProposal`] draws uniformly from a count-structured acceptance
//! set in one shot, the proposal distribution importance sampling reweights.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::design::{Assignment, DesignError, PropensityDesign};
use crate::support::{
    AcceptanceCriterion, CompiledCriterion, CountBlock, SupportError,
};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(
        "sampling budget exhausted: {accepted} of {target} acceptances after {attempts} attempts; \
         the conditioning event may have very small or zero probability"
    )]
    BudgetExhausted { accepted: usize, target: usize, attempts: u64 },
    #[error("the observed assignment does not satisfy the conditioning criterion")]
    ObservedViolatesCriterion,
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// How hard a rejection sampler may try: it stops successfully at
/// `target_accepts` acceptances, and fails once `max_attempts` total draws
/// have been spent first.
#[derive(Debug, Clone, Copy)]
pub struct DrawBudget {
    pub target_accepts: usize,
    pub max_attempts: u64,
}

impl DrawBudget {
    /// A budget of 1000 attempts per requested acceptance — generous for
    /// conditioning events down to acceptance rates around a tenth of a
    /// percent, and a fast failure for effectively impossible ones.
    pub fn accepts(target_accepts: usize) -> Self {
        Self { target_accepts, max_attempts: 1000 * target_accepts as u64 }
    }

    pub fn with_max_attempts(target_accepts: usize, max_attempts: u64) -> Self {
        Self { target_accepts, max_attempts }
    }
}

/// One draw from the design's Bernoulli assignment distribution: unit `i`
/// is treated with probability `e_i`, independently across units.
pub fn bernoulli_draw<R: Rng>(design: &PropensityDesign, rng: &mut R) -> Assignment {
    Assignment::new(design.propensities().iter().map(|&e| rng.gen::<f64>() < e).collect())
}

/// Counts from a completed rejection-sampling run.
#[derive(Debug, Clone, Copy)]
pub struct RejectionStats {
    pub accepted: usize,
    pub attempts: u64,
    /// Fraction of attempts that satisfied the criterion (1.0 for a run
    /// that needed no attempts).
    pub acceptance_rate: f64,
}

/// Rejection sampling with a visitor: draws from the design, keeps
/// assignments satisfying `criterion`, and hands each acceptance to
/// `visit` without storing it. The backbone of the conditional Monte Carlo
/// engines, where only a statistic of each draw is needed.
pub fn rejection_sample_with<R: Rng, F: FnMut(&Assignment)>(
    design: &PropensityDesign,
    criterion: &AcceptanceCriterion,
    budget: DrawBudget,
    rng: &mut R,
    mut visit: F,
) -> Result<RejectionStats, SamplingError> {
    let compiled = CompiledCriterion::compile(criterion, design)?;
    let mut accepted = 0usize;
    let mut attempts = 0u64;
    while accepted < budget.target_accepts {
        if attempts >= budget.max_attempts {
            return Err(SamplingError::BudgetExhausted {
                accepted,
                target: budget.target_accepts,
                attempts,
            });
        }
        attempts += 1;
        let w = bernoulli_draw(design, rng);
        if compiled.accepts(&w, design) {
            accepted += 1;
            visit(&w);
        }
    }
    let acceptance_rate =
        if attempts == 0 { 1.0 } else { accepted as f64 / attempts as f64 };
    Ok(RejectionStats { accepted, attempts, acceptance_rate })
}

/// A batch of exact conditional draws, with the attempt accounting.
#[derive(Debug, Clone)]
pub struct RejectionSample {
    pub accepts: Vec<Assignment>,
    pub attempts: u64,
    pub acceptance_rate: f64,
}

/// Draws `budget.target_accepts` assignments from the design's distribution
/// conditioned on the criterion, by rejection.
pub fn rejection_sample<R: Rng>(
    design: &PropensityDesign,
    criterion: &AcceptanceCriterion,
    budget: DrawBudget,
    rng: &mut R,
) -> Result<RejectionSample, SamplingError> {
    let mut accepts = Vec::with_capacity(budget.target_accepts);
    let stats =
        rejection_sample_with(design, criterion, budget, rng, |w| accepts.push(w.clone()))?;
    Ok(RejectionSample { accepts, attempts: stats.attempts, acceptance_rate: stats.acceptance_rate })
}

/// A sampler for the uniform distribution over a count-structured
/// acceptance set, compiled once and reused across draws.
///
/// Within each count block the treated subset is chosen uniformly at
/// random; units outside every block get a fair coin. The product of those
/// uniform choices is the uniform distribution over the whole acceptance
/// set, which makes this the natural proposal for importance sampling: its
/// support is exactly the conditioning event, and its constant mass cancels
/// from self-normalized weights.
#[derive(Debug, Clone)]
pub struct UniformProposal {
    blocks: Vec<CountBlock>,
    free_units: Vec<usize>,
    n_units: usize,
}

impl UniformProposal {
    /// Compiles a proposal for the criterion, checking that the observed
    /// assignment satisfies it (the conditional distribution being targeted
    /// must contain the data actually seen) and that the criterion is
    /// count-structured.
    pub fn new(
        design: &PropensityDesign,
        criterion: &AcceptanceCriterion,
        w_obs: &Assignment,
    ) -> Result<Self, SamplingError> {
        design.check_len(w_obs)?;
        let compiled = CompiledCriterion::compile(criterion, design)?;
        if !compiled.accepts(w_obs, design) {
            return Err(SamplingError::ObservedViolatesCriterion);
        }
        let structure = compiled.count_structure()?;
        Ok(Self {
            blocks: structure.blocks,
            free_units: structure.free_units,
            n_units: design.n_units(),
        })
    }

    /// One uniform draw from the acceptance set.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Assignment {
        let mut bits = vec![false; self.n_units];
        let mut scratch = Vec::new();
        for block in &self.blocks {
            scratch.clear();
            scratch.extend_from_slice(&block.units);
            let (chosen, _) = scratch.partial_shuffle(rng, block.n_treated);
            for &i in chosen.iter() {
                bits[i] = true;
            }
        }
        for &i in &self.free_units {
            bits[i] = rng.gen::<bool>();
        }
        Assignment::new(bits)
    }
}

/// One-shot form of [`UniformProposal`]: compile, validate, and draw once.
pub fn uniform_conditional_proposal<R: Rng>(
    design: &PropensityDesign,
    criterion: &AcceptanceCriterion,
    w_obs: &Assignment,
    rng: &mut R,
) -> Result<Assignment, SamplingError> {
    Ok(UniformProposal::new(design, criterion, w_obs)?.draw(rng))
}
