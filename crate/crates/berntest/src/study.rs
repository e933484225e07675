//! A simulation bench for operating characteristics.
//!
//! Generates stratified populations with unit-varying propensities, runs
//! the randomization tests over replicated experiments, and reports
//! rejection rates: validity at zero effect, power along an effect grid,
//! and a paired comparison of the rejection- and importance-sampling
//! engines on the doubly conditioned test.
//!
//! Every replication derives its random stream from `(seed, cell,
//! replication)` indices, never from execution order, so results are
//! identical under any thread count.

use std::io::Write as IoWrite;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{
    Assignment, CovariateColumn, CovariateTable, CovariateValue, PropensityDesign,
};
use crate::inference::{
    rejection_p_value_with_budget, InferenceError, MeanDifference, ObservedStudy,
    RejectionOptions, SharpHypothesis, Sidedness,
};
use crate::rng::RngStream;
use crate::sampling::{bernoulli_draw, DrawBudget};
use crate::support::AcceptanceCriterion;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("failed to write study output: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to write study output: {0}")]
    Csv(#[from] csv::Error),
}

/// Configuration of one simulation study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Population size; must equal the sum of `stratum_sizes`.
    #[serde(default = "default_n_units")]
    pub n_units: usize,
    /// Units per stratum; stratum `s` gets covariate value `s + 1`.
    #[serde(default = "default_stratum_sizes")]
    pub stratum_sizes: Vec<usize>,
    /// Covariate effects on the control outcome mean.
    #[serde(default = "default_lambda_values")]
    pub lambda_values: Vec<f64>,
    /// Constant treatment effects to simulate.
    #[serde(default = "default_tau_values")]
    pub tau_values: Vec<f64>,
    /// Experiments per (lambda, tau) cell.
    #[serde(default = "default_replications")]
    pub replications: u64,
    /// Shape parameters of the Beta distribution the propensities are
    /// drawn from.
    #[serde(default = "default_beta_params")]
    pub beta_params: (f64, f64),
    /// Rejection threshold: reject when the p-value is at most `alpha`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Monte-Carlo draws per test.
    #[serde(default = "default_m_draws")]
    pub m_draws: usize,
    #[serde(default)]
    pub seed: u64,
    /// Attempt cap per rejection-sampled test. The default, none, lets a
    /// replication draw until it reaches `m_draws` acceptances: conditional
    /// acceptance rates vary over orders of magnitude across replications,
    /// and a capped run would silently drop exactly the extreme-count
    /// replications a validity study must keep.
    #[serde(default)]
    pub max_attempts_per_test: Option<u64>,
}

fn default_n_units() -> usize {
    100
}
fn default_stratum_sizes() -> Vec<usize> {
    vec![50, 50]
}
fn default_lambda_values() -> Vec<f64> {
    vec![0.0, 1.5, 3.0]
}
fn default_tau_values() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}
fn default_replications() -> u64 {
    1000
}
fn default_beta_params() -> (f64, f64) {
    (5.0, 5.0)
}
fn default_alpha() -> f64 {
    0.05
}
fn default_m_draws() -> usize {
    1000
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_units: default_n_units(),
            stratum_sizes: default_stratum_sizes(),
            lambda_values: default_lambda_values(),
            tau_values: default_tau_values(),
            replications: default_replications(),
            beta_params: default_beta_params(),
            alpha: default_alpha(),
            m_draws: default_m_draws(),
            seed: 0,
            max_attempts_per_test: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        let total: usize = self.stratum_sizes.iter().sum();
        if self.stratum_sizes.is_empty() || self.stratum_sizes.iter().any(|&s| s == 0) {
            return Err(StudyError::Config("every stratum must be non-empty".into()));
        }
        if total != self.n_units {
            return Err(StudyError::Config(format!(
                "stratum sizes sum to {total} but n_units is {}",
                self.n_units
            )));
        }
        if self.lambda_values.is_empty() || self.tau_values.is_empty() {
            return Err(StudyError::Config(
                "lambda_values and tau_values must be non-empty".into(),
            ));
        }
        if self.replications == 0 {
            return Err(StudyError::Config("replications must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StudyError::Config(format!(
                "alpha must lie in (0, 1); got {}",
                self.alpha
            )));
        }
        let (a, b) = self.beta_params;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(StudyError::Config(format!(
                "beta shape parameters must be positive; got ({a}, {b})"
            )));
        }
        if self.m_draws == 0 {
            return Err(StudyError::Config("m_draws must be positive".into()));
        }
        Ok(())
    }

    fn budget(&self) -> DrawBudget {
        DrawBudget::with_max_attempts(
            self.m_draws,
            self.max_attempts_per_test.unwrap_or(u64::MAX),
        )
    }
}

/// The covariate column name the bench uses for strata.
pub const STRATUM_COLUMN: &str = "x";

/// A simulated population: fixed design, covariates, and control outcomes.
/// Treatment effects enter later, when a replication imposes its `tau`.
#[derive(Debug, Clone)]
pub struct Population {
    pub design: PropensityDesign,
    /// Control potential outcomes, one per unit.
    pub y0: Vec<f64>,
    /// Stratum covariate per unit (stratum `s` has value `s + 1`).
    pub x: Vec<f64>,
}

impl Population {
    /// Unit indices of stratum `s` (0-based).
    pub fn stratum_units(&self, s: usize) -> Vec<usize> {
        let value = (s + 1) as f64;
        (0..self.x.len()).filter(|&i| self.x[i] == value).collect()
    }
}

/// Draws one population for a covariate effect `lambda`: propensities from
/// the configured Beta distribution, control outcomes from a unit-variance
/// normal centered at `lambda * x`. Draw order is propensities first, then
/// outcomes, so a fixed stream pins the whole population.
pub fn generate_population(
    config: &SimConfig,
    lambda: f64,
    stream: RngStream,
) -> Result<Population, StudyError> {
    config.validate()?;
    let mut rng = stream.rng();
    let (a, b) = config.beta_params;
    let beta = Beta::new(a, b)
        .map_err(|e| StudyError::Config(format!("bad beta parameters: {e}")))?;
    let mut propensities = Vec::with_capacity(config.n_units);
    for _ in 0..config.n_units {
        // Beta draws are strictly interior almost surely; guard the
        // measure-zero boundary so the design constructor never trips.
        let e = loop {
            let v: f64 = beta.sample(&mut rng);
            if v > 0.0 && v < 1.0 {
                break v;
            }
        };
        propensities.push(e);
    }
    let mut x = Vec::with_capacity(config.n_units);
    for (s, &size) in config.stratum_sizes.iter().enumerate() {
        x.extend(std::iter::repeat((s + 1) as f64).take(size));
    }
    let mut y0 = Vec::with_capacity(config.n_units);
    for &xi in &x {
        let normal = Normal::new(lambda * xi, 1.0)
            .map_err(|e| StudyError::Config(format!("bad outcome distribution: {e}")))?;
        y0.push(normal.sample(&mut rng));
    }
    let mut table = CovariateTable::new();
    table
        .push_column(STRATUM_COLUMN, CovariateColumn::Numeric(x.clone()))
        .expect("fresh table has no duplicate columns");
    let design = PropensityDesign::with_covariates(propensities, table)
        .expect("generated propensities are interior and row counts match");
    Ok(Population { design, y0, x })
}

/// The four tests the bench runs, named by what they condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// Conditions only on nondegeneracy, mirroring the randomization.
    Unconditional,
    /// Conditions on the realized total treated count.
    ConditionalTotal,
    /// Conditions on the realized treated count in stratum 1.
    ConditionalStratum1,
    /// Conditions on both counts jointly.
    ConditionalTotalStratum1,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [
        TestKind::Unconditional,
        TestKind::ConditionalTotal,
        TestKind::ConditionalStratum1,
        TestKind::ConditionalTotalStratum1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Unconditional => "unconditional",
            TestKind::ConditionalTotal => "cond_total",
            TestKind::ConditionalStratum1 => "cond_stratum1",
            TestKind::ConditionalTotalStratum1 => "cond_total_stratum1",
        }
    }

    /// The conditioning criterion for this test, anchored at the realized
    /// assignment's counts.
    pub fn criterion(&self, w_obs: &Assignment, stratum1_units: &[usize]) -> AcceptanceCriterion {
        let total = w_obs.n_treated();
        let in_stratum1 = w_obs.n_treated_among(stratum1_units);
        match self {
            TestKind::Unconditional => AcceptanceCriterion::nondegenerate(),
            TestKind::ConditionalTotal => AcceptanceCriterion::total_treated(total),
            TestKind::ConditionalStratum1 => AcceptanceCriterion::accept_all()
                .and_stratum_treated(STRATUM_COLUMN, CovariateValue::Numeric(1.0), in_stratum1),
            TestKind::ConditionalTotalStratum1 => AcceptanceCriterion::total_treated(total)
                .and_stratum_treated(STRATUM_COLUMN, CovariateValue::Numeric(1.0), in_stratum1),
        }
    }
}

/// One aggregated rejection rate.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PowerRow {
    pub lambda: f64,
    pub tau: f64,
    pub test: String,
    pub rate: f64,
    pub se: f64,
    pub reps: u64,
}

/// Rejection rates across the study grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    /// Writes the table as CSV with columns
    /// `lambda,tau,test,rate,se,reps`.
    pub fn write_csv<W: IoWrite>(&self, writer: W) -> Result<(), StudyError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["lambda", "tau", "test", "rate", "se", "reps"])?;
        for row in &self.rows {
            out.write_record([
                row.lambda.to_string(),
                row.tau.to_string(),
                row.test.clone(),
                row.rate.to_string(),
                row.se.to_string(),
                row.reps.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<(), StudyError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Treated/control counts realized by one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencyRow {
    pub lambda: f64,
    pub tau: f64,
    pub replication: u64,
    pub n_treated: usize,
    pub n_control: usize,
    pub n_treated_stratum1: usize,
    pub n_treated_stratum2: usize,
}

/// Output of [`run_power_study`].
#[derive(Debug, Clone)]
pub struct PowerStudyOutput {
    pub table: PowerTable,
    pub contingency: Vec<ContingencyRow>,
}

// Stream layout roots: populations and cells branch off the seed root by
// fixed indices, never by execution order.
const POPULATION_BRANCH: u64 = 1;
const POWER_BRANCH: u64 = 2;
const COMPARE_BRANCH: u64 = 3;
const REP_DRAW_PURPOSE: u64 = 0;
const REP_TEST_PURPOSE_BASE: u64 = 1;

/// Draws an assignment from the design's Bernoulli distribution,
/// conditioned on nondegeneracy by redraw.
fn draw_nondegenerate<R: Rng>(design: &PropensityDesign, rng: &mut R) -> Assignment {
    loop {
        let w = bernoulli_draw(design, rng);
        if !w.is_degenerate() {
            return w;
        }
    }
}

fn observed_outcomes(y0: &[f64], w: &Assignment, tau: f64) -> Vec<f64> {
    y0.iter()
        .enumerate()
        .map(|(i, &y)| if w.treated(i) { y + tau } else { y })
        .collect()
}

/// Runs the four tests over every `(lambda, tau)` cell.
///
/// Per replication: draw a nondegenerate assignment from the design, form
/// observed outcomes under the cell's constant effect, and test the sharp
/// null of no effect with each conditioning. A test rejects when its
/// Monte-Carlo p-value is at most `alpha`. Replications parallelize across
/// threads; results are identical under any thread count.
pub fn run_power_study(config: &SimConfig) -> Result<PowerStudyOutput, StudyError> {
    config.validate()?;
    let root = RngStream::new(config.seed);
    let mut table = PowerTable::default();
    let mut contingency = Vec::new();
    let n_tau = config.tau_values.len();

    for (li, &lambda) in config.lambda_values.iter().enumerate() {
        let population =
            generate_population(config, lambda, root.substream(POPULATION_BRANCH).substream(li as u64))?;
        let stratum1 = population.stratum_units(0);
        let stratum2 = population.stratum_units(1);
        for (ti, &tau) in config.tau_values.iter().enumerate() {
            let cell = root
                .substream(POWER_BRANCH)
                .substream((li * n_tau + ti) as u64);
            let per_rep: Vec<(ContingencyRow, [bool; 4])> = (0..config.replications)
                .into_par_iter()
                .map(|rep| -> Result<(ContingencyRow, [bool; 4]), StudyError> {
                    let rep_stream = cell.substream(rep);
                    let mut draw_rng = rep_stream.substream(REP_DRAW_PURPOSE).rng();
                    let w_obs = draw_nondegenerate(&population.design, &mut draw_rng);
                    let y_obs = observed_outcomes(&population.y0, &w_obs, tau);
                    let study =
                        ObservedStudy::new(population.design.clone(), w_obs.clone(), y_obs)
                            .expect("population pieces share one length");
                    let mut rejected = [false; 4];
                    for (t, kind) in TestKind::ALL.iter().enumerate() {
                        let criterion = kind.criterion(&w_obs, &stratum1);
                        let mut rng = rep_stream
                            .substream(REP_TEST_PURPOSE_BASE + t as u64)
                            .rng();
                        let report = rejection_p_value_with_budget(
                            &study,
                            &SharpHypothesis::sharp_null(),
                            &MeanDifference,
                            &criterion,
                            config.budget(),
                            Sidedness::TwoSided,
                            RejectionOptions::default(),
                            &mut rng,
                        )?;
                        rejected[t] = report.p_value <= config.alpha;
                    }
                    let row = ContingencyRow {
                        lambda,
                        tau,
                        replication: rep,
                        n_treated: w_obs.n_treated(),
                        n_control: w_obs.len() - w_obs.n_treated(),
                        n_treated_stratum1: w_obs.n_treated_among(&stratum1),
                        n_treated_stratum2: w_obs.n_treated_among(&stratum2),
                    };
                    Ok((row, rejected))
                })
                .collect::<Result<Vec<_>, _>>()?;

            for (t, kind) in TestKind::ALL.iter().enumerate() {
                let rejections =
                    per_rep.iter().filter(|(_, rejected)| rejected[t]).count() as f64;
                let reps = config.replications as f64;
                let rate = rejections / reps;
                table.rows.push(PowerRow {
                    lambda,
                    tau,
                    test: kind.name().to_string(),
                    rate,
                    se: (rate * (1.0 - rate) / reps).sqrt(),
                    reps: config.replications,
                });
            }
            contingency.extend(per_rep.into_iter().map(|(row, _)| row));
        }
    }
    Ok(PowerStudyOutput { table, contingency })
}

/// Wall-clock accounting for one engine in the comparison study: CPU time
/// summed over replications.
#[derive(Debug, Clone, Serialize)]
pub struct MethodTiming {
    pub method: String,
    pub total_ms: f64,
}

/// Output of [`run_rs_vs_is_study`].
#[derive(Debug, Clone)]
pub struct RsVsIsStudy {
    /// Rejection rates, one `test` label per engine:
    /// `rs_m{M}` and `is_m{M}`.
    pub table: PowerTable,
    pub timings: Vec<MethodTiming>,
}

/// Paired comparison of the rejection- and importance-sampling engines on
/// the doubly conditioned test (total and stratum-1 treated counts).
///
/// Every replication draws one observed experiment and hands the identical
/// data to every engine, so rate differences reflect the estimators alone.
/// Rejection sampling runs at `config.m_draws` accepted draws; importance
/// sampling runs once per entry of `is_m_values` proposals.
pub fn run_rs_vs_is_study(
    config: &SimConfig,
    is_m_values: &[usize],
) -> Result<RsVsIsStudy, StudyError> {
    config.validate()?;
    if is_m_values.is_empty() {
        return Err(StudyError::Config(
            "at least one importance-sampling draw count is required".into(),
        ));
    }
    let root = RngStream::new(config.seed);
    let n_methods = 1 + is_m_values.len();
    let mut table = PowerTable::default();
    let mut totals_ms = vec![0.0_f64; n_methods];
    let n_tau = config.tau_values.len();

    for (li, &lambda) in config.lambda_values.iter().enumerate() {
        let population =
            generate_population(config, lambda, root.substream(POPULATION_BRANCH).substream(li as u64))?;
        let stratum1 = population.stratum_units(0);
        for (ti, &tau) in config.tau_values.iter().enumerate() {
            let cell = root
                .substream(COMPARE_BRANCH)
                .substream((li * n_tau + ti) as u64);
            let per_rep: Vec<(Vec<bool>, Vec<f64>)> = (0..config.replications)
                .into_par_iter()
                .map(|rep| -> Result<(Vec<bool>, Vec<f64>), StudyError> {
                    let rep_stream = cell.substream(rep);
                    let mut draw_rng = rep_stream.substream(REP_DRAW_PURPOSE).rng();
                    let w_obs = draw_nondegenerate(&population.design, &mut draw_rng);
                    let y_obs = observed_outcomes(&population.y0, &w_obs, tau);
                    let study =
                        ObservedStudy::new(population.design.clone(), w_obs.clone(), y_obs)
                            .expect("population pieces share one length");
                    let criterion =
                        TestKind::ConditionalTotalStratum1.criterion(&w_obs, &stratum1);
                    let mut rejected = Vec::with_capacity(n_methods);
                    let mut elapsed = Vec::with_capacity(n_methods);

                    let started = Instant::now();
                    let mut rng = rep_stream.substream(REP_TEST_PURPOSE_BASE).rng();
                    let rs = rejection_p_value_with_budget(
                        &study,
                        &SharpHypothesis::sharp_null(),
                        &MeanDifference,
                        &criterion,
                        config.budget(),
                        Sidedness::TwoSided,
                        RejectionOptions::default(),
                        &mut rng,
                    )?;
                    elapsed.push(started.elapsed().as_secs_f64() * 1e3);
                    rejected.push(rs.p_value <= config.alpha);

                    for (j, &m) in is_m_values.iter().enumerate() {
                        let started = Instant::now();
                        let mut rng = rep_stream
                            .substream(REP_TEST_PURPOSE_BASE + 1 + j as u64)
                            .rng();
                        let is = crate::inference::importance_p_value(
                            &study,
                            &SharpHypothesis::sharp_null(),
                            &MeanDifference,
                            &criterion,
                            m,
                            Sidedness::TwoSided,
                            &mut rng,
                        )?;
                        elapsed.push(started.elapsed().as_secs_f64() * 1e3);
                        rejected.push(is.p_value <= config.alpha);
                    }
                    Ok((rejected, elapsed))
                })
                .collect::<Result<Vec<_>, _>>()?;

            let method_names: Vec<String> = std::iter::once(format!("rs_m{}", config.m_draws))
                .chain(is_m_values.iter().map(|m| format!("is_m{m}")))
                .collect();
            for (j, name) in method_names.iter().enumerate() {
                let rejections =
                    per_rep.iter().filter(|(rejected, _)| rejected[j]).count() as f64;
                let reps = config.replications as f64;
                let rate = rejections / reps;
                table.rows.push(PowerRow {
                    lambda,
                    tau,
                    test: name.clone(),
                    rate,
                    se: (rate * (1.0 - rate) / reps).sqrt(),
                    reps: config.replications,
                });
                totals_ms[j] += per_rep.iter().map(|(_, ms)| ms[j]).sum::<f64>();
            }
        }
    }

    let timings = std::iter::once(format!("rs_m{}", config.m_draws))
        .chain(is_m_values.iter().map(|m| format!("is_m{m}")))
        .zip(totals_ms)
        .map(|(method, total_ms)| MethodTiming { method, total_ms })
        .collect();
    Ok(RsVsIsStudy { table, timings })
}

/// Writes the JSON run manifest: the full configuration, the seed, and the
/// crate version that produced the outputs.
pub fn write_run_manifest(
    path: impl AsRef<Path>,
    config: &SimConfig,
) -> Result<(), StudyError> {
    let manifest = serde_json::json!({
        "config": config,
        "seed": config.seed,
        "versions": { "berntest": env!("CARGO_PKG_VERSION") },
    });
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &manifest)
        .map_err(|e| StudyError::Config(format!("manifest serialization failed: {e}")))?;
    writeln!(file)?;
    Ok(())
}
