//! The distribution of the total number of treated units.
//!
//! Under independent Bernoulli assignment with unit-varying probabilities,
//! the count of treated units follows a Poisson-binomial distribution. Its
//! pmf is the normalizing constant for fixed-total supports, and is also
//! estimable by Monte Carlo when only a simulation budget is available.

use rand::seq::SliceRandom;

use crate::design::{DesignError, PropensityDesign};
use crate::numeric::{binomial, CompensatedSum};
use crate::rng::RngStream;

/// Probability that exactly `k` of the independent Bernoulli trials succeed.
///
/// Computed by the standard dynamic-programming convolution: fold trials in
/// one at a time, tracking the distribution of the running success count
/// truncated at `k`. Cost is O(N·k) time and O(k) space; all terms are
/// non-negative, so the recurrence is numerically benign.
///
/// ```
/// use berntest::poisson_binomial::poisson_binomial_pmf;
///
/// // Three trials with p = 0.2, 0.5, 0.8: P(exactly 2 successes) = 0.42.
/// let p = poisson_binomial_pmf(&[0.2, 0.5, 0.8], 2).unwrap();
/// assert!((p - 0.42).abs() < 1e-15);
/// ```
pub fn poisson_binomial_pmf(probabilities: &[f64], k: usize) -> Result<f64, DesignError> {
    let n = probabilities.len();
    if k > n {
        return Err(DesignError::CountOutOfRange { count: k, units: n });
    }
    // dist[j] = P(j successes among the trials folded in so far), j <= k.
    let mut dist = vec![0.0_f64; k + 1];
    dist[0] = 1.0;
    for (i, &p) in probabilities.iter().enumerate() {
        let top = k.min(i + 1);
        for j in (1..=top).rev() {
            dist[j] = dist[j] * (1.0 - p) + dist[j - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    Ok(dist[k])
}

/// The full pmf vector `[P(0), P(1), …, P(N)]` in one O(N²) pass.
pub fn poisson_binomial_pmf_all(probabilities: &[f64]) -> Vec<f64> {
    let n = probabilities.len();
    let mut dist = vec![0.0_f64; n + 1];
    dist[0] = 1.0;
    for (i, &p) in probabilities.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            dist[j] = dist[j] * (1.0 - p) + dist[j - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    dist
}

/// A Monte-Carlo estimate of a total-assignment probability, with its
/// standard error.
#[derive(Debug, Clone, Copy)]
pub struct TotalProbabilityEstimate {
    /// Estimated probability that the design assigns exactly the requested
    /// number of treated units.
    pub estimate: f64,
    /// Monte-Carlo standard error of the estimate.
    pub standard_error: f64,
    /// Number of uniform draws used.
    pub draws: u64,
}

/// Estimates `P(total treated = n_treated)` by uniform sampling.
///
/// Draws `m_draws` assignments uniformly from the set of assignments with
/// exactly `n_treated` treated units, evaluates the design's assignment
/// kernel on each, and scales the sample mean by the number of such
/// assignments. The estimator is unbiased; the reported standard error is
/// the scaled standard error of the sample mean.
///
/// This mirrors how a fixed-total normalizing constant is estimated when a
/// design is too large for the exact recurrence to be worth carrying around
/// — and it gives the exact computation something to be validated against.
pub fn estimate_total_probability(
    design: &PropensityDesign,
    n_treated: usize,
    m_draws: u64,
    stream: RngStream,
) -> Result<TotalProbabilityEstimate, DesignError> {
    let n = design.n_units();
    if n_treated > n {
        return Err(DesignError::CountOutOfRange { count: n_treated, units: n });
    }
    let mut rng = stream.rng();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut bits = vec![false; n];
    let count = binomial(n, n_treated);

    // Welford's online mean/variance over the kernel values.
    let mut mean = 0.0_f64;
    let mut m2 = 0.0_f64;
    for m in 1..=m_draws {
        indices.shuffle(&mut rng);
        bits.iter_mut().for_each(|b| *b = false);
        for &i in &indices[..n_treated] {
            bits[i] = true;
        }
        let kernel = kernel_of_bits(design, &bits);
        let delta = kernel - mean;
        mean += delta / m as f64;
        m2 += delta * (kernel - mean);
    }
    let variance = if m_draws > 1 { m2 / (m_draws - 1) as f64 } else { 0.0 };
    let se_mean = (variance / m_draws as f64).sqrt();
    Ok(TotalProbabilityEstimate {
        estimate: count * mean,
        standard_error: count * se_mean,
        draws: m_draws,
    })
}

fn kernel_of_bits(design: &PropensityDesign, bits: &[bool]) -> f64 {
    let mut product = 1.0;
    for (&e, &b) in design.propensities().iter().zip(bits) {
        product *= if b { e } else { 1.0 - e };
    }
    product
}

/// Sum of the pmf over all counts; equals one up to rounding.
pub fn pmf_total(probabilities: &[f64]) -> f64 {
    let mut sum = CompensatedSum::new();
    for p in poisson_binomial_pmf_all(probabilities) {
        sum.add(p);
    }
    sum.value()
}
