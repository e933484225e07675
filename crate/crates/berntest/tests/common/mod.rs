//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles recompute every quantity from first principles with the
//! plainest possible code — full-cube scans, naive sums, no shared helpers
//! from the crate under test beyond its basic data types — so agreement is
//! evidence, not tautology.

#![allow(dead_code)]

use berntest::{Assignment, PropensityDesign, Sidedness};
use rand::Rng;

/// The bundled ten-unit worked example (`examples/data/study10.csv`).
pub fn study10_design() -> PropensityDesign {
    PropensityDesign::new(vec![0.9, 0.8, 0.5, 0.5, 0.7, 0.4, 0.6, 0.3, 0.1, 0.2]).unwrap()
}

pub fn study10_w_obs() -> Assignment {
    Assignment::from_indicators(&[0, 1, 1, 0, 0, 1, 1, 1, 0, 1])
}

pub fn study10_y_obs() -> Vec<f64> {
    vec![-0.56, 0.26, 2.06, 0.07, 0.13, 2.22, 0.96, -0.77, -0.69, 0.05]
}

/// Path to the bundled CSV, valid from any test working directory.
pub fn study10_csv_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/study10.csv")
}

/// Which assignments an oracle computation ranges over.
#[derive(Clone, Copy)]
pub enum OracleSupport {
    Full,
    Nondegenerate,
    FixedTotal(usize),
}

impl OracleSupport {
    fn admits(&self, bits: &[bool]) -> bool {
        let treated = bits.iter().filter(|&&b| b).count();
        match self {
            OracleSupport::Full => true,
            OracleSupport::Nondegenerate => treated > 0 && treated < bits.len(),
            OracleSupport::FixedTotal(k) => treated == *k,
        }
    }
}

/// Assignment probability product, written as the most literal loop.
pub fn oracle_kernel(propensities: &[f64], bits: &[bool]) -> f64 {
    let mut product = 1.0;
    for (i, &treated) in bits.iter().enumerate() {
        product *= if treated { propensities[i] } else { 1.0 - propensities[i] };
    }
    product
}

/// Mean difference treated-minus-control; 0 when either group is empty.
pub fn oracle_mean_difference(outcomes: &[f64], bits: &[bool]) -> f64 {
    let (mut ts, mut tn, mut cs, mut cn) = (0.0, 0usize, 0.0, 0usize);
    for (i, &treated) in bits.iter().enumerate() {
        if treated {
            ts += outcomes[i];
            tn += 1;
        } else {
            cs += outcomes[i];
            cn += 1;
        }
    }
    if tn == 0 || cn == 0 {
        return 0.0;
    }
    ts / tn as f64 - cs / cn as f64
}

/// Imputed outcomes under a constant-effect hypothesis, by the identity
/// `Y_tau(w) = y_obs + tau * (w - w_obs)` applied coordinate-wise.
pub fn oracle_impute(y_obs: &[f64], w_obs: &[bool], bits: &[bool], tau: f64) -> Vec<f64> {
    y_obs
        .iter()
        .enumerate()
        .map(|(i, &y)| y + tau * (bits[i] as i8 - w_obs[i] as i8) as f64)
        .collect()
}

fn oracle_extreme(sidedness: Sidedness, t: f64, t_obs: f64, tau: f64) -> bool {
    // Strict two-sided, closed one-sided, with rounding-noise ties
    // classified as ties rather than by rounding direction.
    let band = 1e-12 * (t - tau).abs().max((t_obs - tau).abs()).max(1.0);
    match sidedness {
        Sidedness::TwoSided => (t - tau).abs() > (t_obs - tau).abs() + band,
        Sidedness::UpperOneSided => t >= t_obs - band,
        Sidedness::LowerOneSided => t <= t_obs + band,
    }
}

/// Exact p-value by a full 2^N scan with naive accumulation.
pub fn oracle_exact_p(
    propensities: &[f64],
    w_obs: &[bool],
    y_obs: &[f64],
    tau: f64,
    support: OracleSupport,
    sidedness: Sidedness,
) -> f64 {
    let n = propensities.len();
    assert!(n <= 20, "oracle scans the full cube");
    let t_obs = oracle_mean_difference(y_obs, w_obs);
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for word in 0u32..(1u32 << n) {
        // Unit 0 is the most significant bit, matching Assignment's order.
        let bits: Vec<bool> = (0..n).map(|i| word >> (n - 1 - i) & 1 == 1).collect();
        if !support.admits(&bits) {
            continue;
        }
        let kernel = oracle_kernel(propensities, &bits);
        let outcomes = oracle_impute(y_obs, w_obs, &bits, tau);
        let t = oracle_mean_difference(&outcomes, &bits);
        denominator += kernel;
        if oracle_extreme(sidedness, t, t_obs, tau) {
            numerator += kernel;
        }
    }
    numerator / denominator
}

/// Poisson-binomial pmf by brute-force subset scan.
pub fn oracle_poisson_binomial_pmf(propensities: &[f64], k: usize) -> f64 {
    let n = propensities.len();
    assert!(n <= 20, "oracle scans the full cube");
    let mut total = 0.0;
    for word in 0u32..(1u32 << n) {
        if (word.count_ones() as usize) != k {
            continue;
        }
        let bits: Vec<bool> = (0..n).map(|i| word >> (n - 1 - i) & 1 == 1).collect();
        total += oracle_kernel(propensities, &bits);
    }
    total
}

/// A random small test instance: interior propensities, standard-normal
/// outcomes, and an observed assignment drawn from the design itself
/// (redrawn until nondegenerate so every support below is well-posed).
pub struct RandomInstance {
    pub design: PropensityDesign,
    pub w_obs: Assignment,
    pub y_obs: Vec<f64>,
}

pub fn random_instance<R: Rng>(n: usize, rng: &mut R) -> RandomInstance {
    let propensities: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    let design = PropensityDesign::new(propensities).unwrap();
    let y_obs: Vec<f64> = (0..n)
        .map(|_| {
            // Box-Muller keeps the oracle free of distribution crates.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen::<f64>();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect();
    let w_obs = loop {
        let bits: Vec<bool> =
            design.propensities().iter().map(|&e| rng.gen::<f64>() < e).collect();
        let treated = bits.iter().filter(|&&b| b).count();
        if treated > 0 && treated < n {
            break Assignment::new(bits);
        }
    };
    RandomInstance { design, w_obs, y_obs }
}

pub fn assignment_bits(w: &Assignment) -> Vec<bool> {
    (0..w.len()).map(|i| w.treated(i)).collect()
}

/// Pearson chi-square statistic over observed counts and expected
/// probabilities (which must sum to 1).
pub fn chi_square_statistic(observed: &[u64], expected_probability: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(expected_probability)
        .map(|(&o, &p)| {
            let expected = p * total as f64;
            let diff = o as f64 - expected;
            diff * diff / expected
        })
        .sum()
}

/// Upper 0.1% chi-square quantile: the suites reject a sampler only on
/// evidence stronger than p < 0.001.
pub fn chi_square_crit_999(df: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999)
}
