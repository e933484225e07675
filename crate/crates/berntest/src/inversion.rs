//! Confidence intervals and point estimates by test inversion.
//!
//! Inverting a randomization test means sweeping a grid of hypothesized
//! constant effects, testing each one, and collecting the effects the test
//! does not reject. The resulting set is a confidence interval for the
//! effect; the hypothesis with the largest p-value is the point estimate.
//! One draw set is shared across the whole grid, so Monte-Carlo noise
//! shifts the p-curve coherently instead of jittering every grid point
//! independently.

use serde::{Deserialize, Serialize};


use crate::design::Assignment;
use crate::inference::{
    exact_p_value, InferenceError, Method, ObservedStudy, RejectionOptions, SharpHypothesis,
    Sidedness, TestStatistic,
};
use crate::numeric::CompensatedSum;
use crate::rng::RngStream;
use crate::sampling::{rejection_sample_with, DrawBudget, UniformProposal};
use crate::support::SupportSpec;

/// An inclusive, evenly spaced grid of hypothesized effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("tau grid bounds must be finite with lo <= hi; got {lo}..{hi}")]
    BadBounds { lo: f64, hi: f64 },
    #[error("tau grid step must be positive and finite; got {0}")]
    BadStep(f64),
}

impl TauGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, GridError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(GridError::BadBounds { lo, hi });
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(GridError::BadStep(step));
        }
        Ok(Self { lo, hi, step })
    }

    /// The grid points `lo, lo + step, …` up to and including `hi` (with a
    /// relative tolerance so that a bound like 3.0 is not lost to the
    /// rounding of `0.1`-sized steps). A degenerate grid (`lo == hi`) is a
    /// single point.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-6).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// Which p-value engine drives the inversion.
#[derive(Debug, Clone, Copy)]
pub enum InversionEngine {
    /// Full enumeration at every grid point.
    Exact,
    /// One shared batch of conditional rejection-sampling draws.
    Rejection { m_draws: usize, options: RejectionOptions },
    /// One shared batch of uniform proposals with importance weights.
    Importance { m_draws: usize },
}

/// Echo of the engine an inversion ran under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineConfig {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_draws: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_id: Option<u64>,
}

/// One grid point of the p-curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PCurvePoint {
    pub tau: f64,
    pub p_value: f64,
}

/// The full result of inverting a test over a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionResult {
    /// Smallest non-rejected effect; absent when every effect is rejected.
    pub ci_lo: Option<f64>,
    /// Largest non-rejected effect; absent when every effect is rejected.
    pub ci_hi: Option<f64>,
    /// The grid effect with the largest p-value (ties resolve to the
    /// midpoint of the tied range). Defined even when the interval is
    /// empty.
    pub point_estimate: f64,
    pub alpha: f64,
    pub p_curve: Vec<PCurvePoint>,
    /// Whether the non-rejected effects form one unbroken run of grid
    /// points. When false, `ci_lo..ci_hi` is the convex hull of a broken
    /// acceptance set — possible under Monte-Carlo noise near the
    /// boundary — and worth a closer look at the p-curve.
    pub contiguous: bool,
    pub engine_config: EngineConfig,
}

/// Inverts a randomization test over a grid of constant effects.
///
/// The confidence set at level `alpha` is every grid effect whose p-value
/// exceeds `alpha`; the reported interval is its range, with a diagnostic
/// flag when the set has interior gaps. Grid endpoints are reported as-is,
/// never interpolated.
///
/// The Monte Carlo engines draw one assignment batch up front and reuse it
/// at every grid point. That is valid because conditioning criteria are
/// functions of assignments and covariates only — the hypothesized effect
/// moves the imputed outcomes, not the draw distribution — and it makes the
/// p-curve a smooth function of the hypothesis for any fixed stream.
pub fn invert_test(
    study: &ObservedStudy,
    statistic: &dyn TestStatistic,
    support: &SupportSpec,
    grid: &TauGrid,
    alpha: f64,
    sidedness: Sidedness,
    engine: InversionEngine,
    stream: RngStream,
) -> Result<InversionResult, InferenceError> {
    let taus = grid.points();
    let (p_values, engine_config) = match engine {
        InversionEngine::Exact => {
            let ps = taus
                .iter()
                .map(|&tau| {
                    exact_p_value(
                        study,
                        &SharpHypothesis::additive(tau),
                        statistic,
                        support,
                        sidedness,
                    )
                    .map(|r| r.p_value)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let config = EngineConfig {
                method: Method::Exact,
                m_draws: None,
                seed: None,
                stream_id: None,
            };
            (ps, config)
        }
        InversionEngine::Rejection { m_draws, options } => {
            let criterion = support.to_criterion();
            let mut rng = stream.rng();
            let mut draws: Vec<Assignment> = Vec::with_capacity(m_draws);
            rejection_sample_with(
                study.design(),
                &criterion,
                DrawBudget::accepts(m_draws),
                &mut rng,
                |w| draws.push(w.clone()),
            )?;
            let ps = taus
                .iter()
                .map(|&tau| rejection_p_at(study, statistic, &draws, tau, sidedness, options))
                .collect();
            let config = EngineConfig {
                method: Method::RejectionSampling,
                m_draws: Some(m_draws as u64),
                seed: Some(stream.seed()),
                stream_id: Some(stream.stream_id()),
            };
            (ps, config)
        }
        InversionEngine::Importance { m_draws } => {
            let criterion = support.to_criterion();
            let proposal = UniformProposal::new(study.design(), &criterion, study.w_obs())?;
            let mut rng = stream.rng();
            let mut draws: Vec<Assignment> = Vec::with_capacity(m_draws);
            let mut weights: Vec<f64> = Vec::with_capacity(m_draws);
            let log_space = study.n_units() > 64;
            for _ in 0..m_draws {
                let w = proposal.draw(&mut rng);
                weights.push(if log_space {
                    study.design().log_assignment_kernel(&w)
                } else {
                    study.design().assignment_kernel(&w)
                });
                draws.push(w);
            }
            if log_space {
                let shift = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for lw in &mut weights {
                    *lw = (*lw - shift).exp();
                }
            }
            let ps = taus
                .iter()
                .map(|&tau| importance_p_at(study, statistic, &draws, &weights, tau, sidedness))
                .collect();
            let config = EngineConfig {
                method: Method::ImportanceSampling,
                m_draws: Some(m_draws as u64),
                seed: Some(stream.seed()),
                stream_id: Some(stream.stream_id()),
            };
            (ps, config)
        }
    };

    let p_curve: Vec<PCurvePoint> = taus
        .iter()
        .zip(&p_values)
        .map(|(&tau, &p_value)| PCurvePoint { tau, p_value })
        .collect();

    let accepted: Vec<usize> =
        (0..taus.len()).filter(|&i| p_values[i] > alpha).collect();
    let (ci_lo, ci_hi, contiguous) = match (accepted.first(), accepted.last()) {
        (Some(&first), Some(&last)) => (
            Some(taus[first]),
            Some(taus[last]),
            last - first + 1 == accepted.len(),
        ),
        _ => (None, None, true),
    };

    let p_max = p_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let argmax: Vec<usize> =
        (0..taus.len()).filter(|&i| p_values[i] == p_max).collect();
    let point_estimate =
        (taus[*argmax.first().unwrap()] + taus[*argmax.last().unwrap()]) / 2.0;

    Ok(InversionResult {
        ci_lo,
        ci_hi,
        point_estimate,
        alpha,
        p_curve,
        contiguous,
        engine_config,
    })
}

/// Rejection-sampling p-value at one hypothesized effect, over a fixed
/// accepted-draw batch.
fn rejection_p_at(
    study: &ObservedStudy,
    statistic: &dyn TestStatistic,
    draws: &[Assignment],
    tau: f64,
    sidedness: Sidedness,
    options: RejectionOptions,
) -> f64 {
    let hypothesis = SharpHypothesis::additive(tau);
    let t_obs = study.observed_statistic(statistic);
    let mut outcomes = Vec::new();
    let mut extreme = 0u64;
    for w in draws {
        hypothesis.impute_into(study, w, &mut outcomes);
        let t = statistic.evaluate(&outcomes, w);
        if crate::inference::is_extreme(sidedness, t, t_obs, tau) {
            extreme += 1;
        }
    }
    let m = draws.len() as f64;
    if options.add_one_correction {
        (extreme as f64 + 1.0) / (m + 1.0)
    } else {
        extreme as f64 / m
    }
}

/// Self-normalized importance-sampling p-value at one hypothesized effect,
/// over a fixed proposal batch with precomputed weights.
fn importance_p_at(
    study: &ObservedStudy,
    statistic: &dyn TestStatistic,
    draws: &[Assignment],
    weights: &[f64],
    tau: f64,
    sidedness: Sidedness,
) -> f64 {
    let hypothesis = SharpHypothesis::additive(tau);
    let t_obs = study.observed_statistic(statistic);
    let mut outcomes = Vec::new();
    let mut numerator = CompensatedSum::new();
    let mut denominator = CompensatedSum::new();
    for (w, &weight) in draws.iter().zip(weights) {
        hypothesis.impute_into(study, w, &mut outcomes);
        let t = statistic.evaluate(&outcomes, w);
        denominator.add(weight);
        if crate::inference::is_extreme(sidedness, t, t_obs, tau) {
            numerator.add(weight);
        }
    }
    numerator.value() / denominator.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::PropensityDesign;
    use crate::inference::MeanDifference;

    fn grid_study() -> ObservedStudy {
        let design =
            PropensityDesign::new(vec![0.4, 0.6, 0.5, 0.3, 0.7, 0.5]).unwrap();
        let w_obs = Assignment::from_indicators(&[1, 0, 1, 0, 0, 1]);
        let y = vec![1.9, 0.3, 2.4, -0.4, 0.8, 1.6];
        ObservedStudy::new(design, w_obs, y).unwrap()
    }

    #[test]
    fn grid_points_cover_the_range_inclusively() {
        let grid = TauGrid::new(-3.0, 3.0, 0.1).unwrap();
        let points = grid.points();
        assert_eq!(points.len(), 61);
        assert_eq!(points[0], -3.0);
        assert!((points[60] - 3.0).abs() < 1e-9);
        let single = TauGrid::new(0.0, 0.0, 0.5).unwrap();
        assert_eq!(single.points(), vec![0.0]);
        assert!(TauGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(TauGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TauGrid::new(0.0, 1.0, -0.1).is_err());
        assert!(TauGrid::new(f64::NAN, 1.0, 0.1).is_err());
    }

    #[test]
    fn exact_inversion_matches_pointwise_tests() {
        let study = grid_study();
        let grid = TauGrid::new(-2.0, 4.0, 0.25).unwrap();
        let result = invert_test(
            &study,
            &MeanDifference,
            &SupportSpec::Nondegenerate,
            &grid,
            0.05,
            Sidedness::TwoSided,
            InversionEngine::Exact,
            RngStream::new(0),
        )
        .unwrap();
        assert_eq!(result.p_curve.len(), grid.points().len());
        for point in &result.p_curve {
            let direct = exact_p_value(
                &study,
                &SharpHypothesis::additive(point.tau),
                &MeanDifference,
                &SupportSpec::Nondegenerate,
                Sidedness::TwoSided,
            )
            .unwrap()
            .p_value;
            assert_eq!(point.p_value, direct, "tau = {}", point.tau);
        }
        // The interval is the range of non-rejected effects.
        let accepted: Vec<f64> = result
            .p_curve
            .iter()
            .filter(|pt| pt.p_value > 0.05)
            .map(|pt| pt.tau)
            .collect();
        assert!(!accepted.is_empty());
        assert_eq!(result.ci_lo, accepted.first().copied());
        assert_eq!(result.ci_hi, accepted.last().copied());
        assert!(result.contiguous);
        let lo = result.ci_lo.unwrap();
        let hi = result.ci_hi.unwrap();
        assert!(lo <= result.point_estimate && result.point_estimate <= hi);
    }

    #[test]
    fn nested_levels_nest_intervals() {
        let study = grid_study();
        let grid = TauGrid::new(-2.0, 4.0, 0.25).unwrap();
        let at = |alpha: f64| {
            invert_test(
                &study,
                &MeanDifference,
                &SupportSpec::Nondegenerate,
                &grid,
                alpha,
                Sidedness::TwoSided,
                InversionEngine::Exact,
                RngStream::new(0),
            )
            .unwrap()
        };
        let wide = at(0.05);
        let narrow = at(0.20);
        assert!(narrow.ci_lo.unwrap() >= wide.ci_lo.unwrap());
        assert!(narrow.ci_hi.unwrap() <= wide.ci_hi.unwrap());
    }

    #[test]
    fn shared_draw_inversion_is_deterministic_and_tracks_exact() {
        let study = grid_study();
        let grid = TauGrid::new(-1.0, 3.0, 0.5).unwrap();
        let run = || {
            invert_test(
                &study,
                &MeanDifference,
                &SupportSpec::FixedTotal(3),
                &grid,
                0.05,
                Sidedness::TwoSided,
                InversionEngine::Rejection {
                    m_draws: 3000,
                    options: RejectionOptions::default(),
                },
                RngStream::with_stream(31, 7),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        for (pa, pb) in a.p_curve.iter().zip(&b.p_curve) {
            assert_eq!(pa.p_value, pb.p_value);
        }
        let exact = invert_test(
            &study,
            &MeanDifference,
            &SupportSpec::FixedTotal(3),
            &grid,
            0.05,
            Sidedness::TwoSided,
            InversionEngine::Exact,
            RngStream::new(0),
        )
        .unwrap();
        for (mc, ex) in a.p_curve.iter().zip(&exact.p_curve) {
            let se = (ex.p_value * (1.0 - ex.p_value) / 3000.0).sqrt().max(1e-3);
            assert!(
                (mc.p_value - ex.p_value).abs() < 5.0 * se,
                "tau {}: {} vs {}",
                mc.tau,
                mc.p_value,
                ex.p_value
            );
        }
        assert_eq!(a.engine_config.seed, Some(31));
        assert_eq!(a.engine_config.stream_id, Some(7));
    }

    #[test]
    fn importance_inversion_shares_one_proposal_batch() {
        let study = grid_study();
        let grid = TauGrid::new(-1.0, 3.0, 0.5).unwrap();
        let result = invert_test(
            &study,
            &MeanDifference,
            &SupportSpec::FixedTotal(3),
            &grid,
            0.05,
            Sidedness::TwoSided,
            InversionEngine::Importance { m_draws: 5000 },
            RngStream::with_stream(32, 0),
        )
        .unwrap();
        let exact = invert_test(
            &study,
            &MeanDifference,
            &SupportSpec::FixedTotal(3),
            &grid,
            0.05,
            Sidedness::TwoSided,
            InversionEngine::Exact,
            RngStream::new(0),
        )
        .unwrap();
        for (is, ex) in result.p_curve.iter().zip(&exact.p_curve) {
            assert!(
                (is.p_value - ex.p_value).abs() < 0.05,
                "tau {}: {} vs {}",
                is.tau,
                is.p_value,
                ex.p_value
            );
        }
    }

    #[test]
    fn rejecting_everything_leaves_an_empty_interval_with_the_curve_intact() {
        let study = grid_study();
        let grid = TauGrid::new(-1.0, 1.0, 0.5).unwrap();
        let result = invert_test(
            &study,
            &MeanDifference,
            &SupportSpec::Nondegenerate,
            &grid,
            0.9999,
            Sidedness::TwoSided,
            InversionEngine::Exact,
            RngStream::new(0),
        )
        .unwrap();
        assert_eq!(result.ci_lo, None);
        assert_eq!(result.ci_hi, None);
        assert_eq!(result.p_curve.len(), 5);
        assert!(result.p_curve.iter().all(|pt| pt.p_value <= 0.9999));
        assert!(result.point_estimate.is_finite());
    }

    #[test]
    fn result_serialization_round_trips() {
        let study = grid_study();
        let grid = TauGrid::new(0.0, 1.0, 0.5).unwrap();
        let result = invert_test(
            &study,
            &MeanDifference,
            &SupportSpec::Nondegenerate,
            &grid,
            0.05,
            Sidedness::TwoSided,
            InversionEngine::Exact,
            RngStream::new(0),
        )
        .unwrap();
        let json = serde_json::to_string(&result).unwrap();
        let back: InversionResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.ci_lo, result.ci_lo);
        assert_eq!(back.ci_hi, result.ci_hi);
        assert_eq!(back.point_estimate, result.point_estimate);
        assert_eq!(back.p_curve.len(), result.p_curve.len());
    }
}
