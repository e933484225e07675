//! Command-line front door: dataset ingestion, test execution, interval
//! construction, support enumeration, and simulation runs, all emitting
//! machine-readable output.
//!
//! Study data arrives as CSV with columns `unit_id`, `w_obs`, `y_obs`,
//! `propensity`, and any number of covariate columns prefixed `x_`.
//! Results leave as a JSON envelope (or plain CSV for `enumerate`), with
//! every float serialized losslessly plus a display-rounded companion.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::design::{
    Assignment, CovariateColumn, CovariateTable, CovariateValue, DesignError, PropensityDesign,
};
use crate::inference::{
    builtin_statistic, exact_p_value, importance_p_value, rejection_p_value, InferenceError,
    ObservedStudy, RejectionOptions, SharpHypothesis, Sidedness, TestStatistic,
};
use crate::inversion::{invert_test, GridError, InversionEngine, TauGrid};
use crate::rng::RngStream;
use crate::study::{
    run_power_study, run_rs_vs_is_study, write_run_manifest, SimConfig, StudyError,
};
use crate::support::{
    enumerate_support, support_normalizer, AcceptanceCriterion, SupportError, SupportSpec,
    DEFAULT_ENUMERATION_LIMIT,
};

/// Exit code 2: the input was wrong. Exit code 3: the input was fine but
/// the computation could not deliver (support too large, budget exhausted,
/// criterion unusable for the chosen engine).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("row {row}, column {column}: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Study(#[from] StudyError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_)
            | CliError::Parse { .. }
            | CliError::Io(_)
            | CliError::Csv(_)
            | CliError::Json(_)
            | CliError::Grid(_)
            | CliError::Design(_) => 2,
            CliError::Support(_) | CliError::Inference(_) => 3,
            CliError::Study(StudyError::Config(_)) => 2,
            CliError::Study(_) => 3,
        }
    }
}

/// Randomization inference for Bernoulli-trial experiments.
#[derive(Debug, Parser)]
#[command(name = "berntest", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a sharp hypothesis about a constant treatment effect.
    Test(TestArgs),
    /// Invert the test over an effect grid: confidence interval and point
    /// estimate.
    Ci(CiArgs),
    /// Run the simulation bench: validity/power table and engine
    /// comparison.
    Simulate(SimulateArgs),
    /// List every assignment in a support with its probability and
    /// statistic.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SupportKind {
    /// All 2^N assignments.
    Full,
    /// At least one treated and one control unit.
    Nondegenerate,
    /// Exactly --nt treated units.
    FixedNt,
    /// The conjunction of --nt and --stratum clauses.
    Criterion,
}

impl SupportKind {
    fn as_str(&self) -> &'static str {
        match self {
            SupportKind::Full => "full",
            SupportKind::Nondegenerate => "nondegenerate",
            SupportKind::FixedNt => "fixed-nt",
            SupportKind::Criterion => "criterion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Rejection,
    Importance,
}

impl MethodArg {
    fn as_str(&self) -> &'static str {
        match self {
            MethodArg::Exact => "exact",
            MethodArg::Rejection => "rejection",
            MethodArg::Importance => "importance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SidedArg {
    Two,
    Upper,
    Lower,
}

impl SidedArg {
    fn to_sidedness(self) -> Sidedness {
        match self {
            SidedArg::Two => Sidedness::TwoSided,
            SidedArg::Upper => Sidedness::UpperOneSided,
            SidedArg::Lower => Sidedness::LowerOneSided,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            SidedArg::Two => "two",
            SidedArg::Upper => "upper",
            SidedArg::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimingArg {
    /// Report wall-clock milliseconds in the envelope.
    Wall,
    /// Omit timing so repeated runs are byte-identical.
    None,
}

/// One `--stratum COL=VALUE:COUNT` clause.
#[derive(Debug, Clone)]
pub struct StratumSpec {
    pub column: String,
    pub value: CovariateValue,
    pub count: usize,
    raw: String,
}

impl FromStr for StratumSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected COL=VALUE:COUNT, got '{s}'");
        let (column, rest) = s.split_once('=').ok_or_else(bad)?;
        let (value, count) = rest.rsplit_once(':').ok_or_else(bad)?;
        if column.is_empty() || value.is_empty() {
            return Err(bad());
        }
        let count: usize = count
            .parse()
            .map_err(|_| format!("stratum count must be a non-negative integer, got '{count}'"))?;
        let value = match value.parse::<f64>() {
            Ok(v) => CovariateValue::Numeric(v),
            Err(_) => CovariateValue::Categorical(value.to_string()),
        };
        Ok(StratumSpec { column: column.to_string(), value, count, raw: s.to_string() })
    }
}

/// A `LO:HI:STEP` effect grid.
#[derive(Debug, Clone, Copy)]
pub struct TauGridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for TauGridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected LO:HI:STEP, got '{s}'"));
        }
        let parse = |part: &str| {
            part.parse::<f64>()
                .map_err(|_| format!("'{part}' in '{s}' is not a number"))
        };
        Ok(TauGridSpec { lo: parse(parts[0])?, hi: parse(parts[1])?, step: parse(parts[2])? })
    }
}

impl fmt::Display for TauGridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

#[derive(Debug, Args)]
pub struct SupportArgs {
    /// Assignment support the test conditions on.
    #[arg(long, value_enum, default_value_t = SupportKind::Nondegenerate)]
    pub support: SupportKind,
    /// Total treated count (required by fixed-nt; a clause under
    /// criterion).
    #[arg(long)]
    pub nt: Option<usize>,
    /// Stratum treated-count clause COL=VALUE:COUNT (repeatable; criterion
    /// support only).
    #[arg(long = "stratum")]
    pub strata: Vec<StratumSpec>,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Test statistic.
    #[arg(long, default_value = "mean-diff")]
    pub stat: String,
    /// P-value engine.
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    /// Monte-Carlo draws for the sampling engines.
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Hypothesized constant treatment effect.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau: f64,
    /// Which tail counts as evidence.
    #[arg(long, value_enum, default_value_t = SidedArg::Two)]
    pub sided: SidedArg,
    /// Random seed for the sampling engines.
    #[arg(long, env = "BERNTEST_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results never depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Whether the envelope carries wall-clock timing.
    #[arg(long, value_enum, default_value_t = TimingArg::Wall)]
    pub timing: TimingArg,
    /// Write the envelope here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Study CSV: unit_id, w_obs, y_obs, propensity, optional x_* columns.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub support: SupportArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub test: TestArgs,
    /// Rejection level defining the interval.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Effect grid to invert over, as LO:HI:STEP.
    #[arg(long = "tau-grid", default_value = "-3:3:0.1", allow_hyphen_values = true)]
    pub tau_grid: TauGridSpec,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; omitted fields take documented defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving power.csv, rs_vs_is.csv, and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Importance-sampling draw counts for the engine comparison
    /// (repeatable).
    #[arg(long = "compare-m", default_values_t = vec![25_000_usize])]
    pub compare_m: Vec<usize>,
    /// Overrides the config seed.
    #[arg(long, env = "BERNTEST_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results never depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Whether the stdout summary carries wall-clock timing.
    #[arg(long, value_enum, default_value_t = TimingArg::Wall)]
    pub timing: TimingArg,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Study CSV: unit_id, w_obs, y_obs, propensity, optional x_* columns.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub support: SupportArgs,
    /// Test statistic evaluated per assignment.
    #[arg(long, default_value = "mean-diff")]
    pub stat: String,
    /// Hypothesized effect the statistic is imputed under.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau: f64,
    /// Write the CSV here (and a summary envelope to stdout); default is
    /// CSV on stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Whether the summary envelope carries wall-clock timing.
    #[arg(long, value_enum, default_value_t = TimingArg::Wall)]
    pub timing: TimingArg,
}

/// The one JSON object every run prints: what ran, with which inputs, and
/// what came out.
#[derive(Debug, Serialize)]
pub struct ResultEnvelope {
    pub command: String,
    pub config_echo: serde_json::Value,
    pub seed: u64,
    pub results: serde_json::Value,
    pub diagnostics: serde_json::Value,
    pub timing_ms: Option<f64>,
}

/// An ingested study file.
#[derive(Debug, Clone)]
pub struct StudyFile {
    pub design: PropensityDesign,
    pub w_obs: Assignment,
    pub y_obs: Vec<f64>,
    pub unit_ids: Vec<String>,
}

impl StudyFile {
    pub fn to_observed_study(&self) -> Result<ObservedStudy, DesignError> {
        ObservedStudy::new(self.design.clone(), self.w_obs.clone(), self.y_obs.clone())
    }
}

const REQUIRED_COLUMNS: [&str; 4] = ["unit_id", "w_obs", "y_obs", "propensity"];
const COVARIATE_PREFIX: &str = "x_";

/// Reads and validates a study CSV. Covariate columns (prefix `x_`) are
/// numeric when every value parses as a number, categorical otherwise.
pub fn read_study_file(path: &Path) -> Result<StudyFile, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let mut columns: HashMap<String, usize> = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if columns.insert(name.to_string(), i).is_some() {
            return Err(CliError::Input(format!("duplicate column '{name}'")));
        }
    }
    for required in REQUIRED_COLUMNS {
        if !columns.contains_key(required) {
            return Err(CliError::Input(format!(
                "missing required column '{required}' (have: {})",
                headers.iter().collect::<Vec<_>>().join(", ")
            )));
        }
    }
    let covariate_columns: Vec<(String, usize)> = headers
        .iter()
        .enumerate()
        .filter(|(_, name)| name.starts_with(COVARIATE_PREFIX))
        .map(|(i, name)| (name.to_string(), i))
        .collect();

    let mut unit_ids = Vec::new();
    let mut indicators = Vec::new();
    let mut y_obs = Vec::new();
    let mut propensities = Vec::new();
    let mut covariate_raw: Vec<Vec<String>> = vec![Vec::new(); covariate_columns.len()];

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // header is line 1
        let record = record.map_err(|e| CliError::Parse {
            row,
            column: "<record>".into(),
            message: e.to_string(),
        })?;
        let field = |column: &str| -> Result<&str, CliError> {
            let value = record.get(columns[column]).unwrap_or("");
            if value.is_empty() {
                Err(CliError::Parse { row, column: column.into(), message: "missing value".into() })
            } else {
                Ok(value)
            }
        };
        unit_ids.push(field("unit_id")?.to_string());
        let w = field("w_obs")?;
        match w.parse::<u8>() {
            Ok(0) => indicators.push(0),
            Ok(1) => indicators.push(1),
            _ => {
                return Err(CliError::Parse {
                    row,
                    column: "w_obs".into(),
                    message: format!("treatment indicator must be 0 or 1, got '{w}'"),
                })
            }
        }
        let y = field("y_obs")?;
        let y: f64 = y.parse().map_err(|_| CliError::Parse {
            row,
            column: "y_obs".into(),
            message: format!("outcome must be a number, got '{y}'"),
        })?;
        if !y.is_finite() {
            return Err(CliError::Parse {
                row,
                column: "y_obs".into(),
                message: "outcome must be finite".into(),
            });
        }
        y_obs.push(y);
        let e = field("propensity")?;
        let e: f64 = e.parse().map_err(|_| CliError::Parse {
            row,
            column: "propensity".into(),
            message: format!("propensity must be a number, got '{e}'"),
        })?;
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Parse {
                row,
                column: "propensity".into(),
                message: format!("propensity must lie strictly between 0 and 1, got {e}"),
            });
        }
        propensities.push(e);
        for (slot, (name, i)) in covariate_raw.iter_mut().zip(&covariate_columns) {
            let value = record.get(*i).unwrap_or("");
            if value.is_empty() {
                return Err(CliError::Parse {
                    row,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            slot.push(value.to_string());
        }
    }
    if propensities.is_empty() {
        return Err(CliError::Input(format!("{} has no data rows", path.display())));
    }

    let design = if covariate_columns.is_empty() {
        PropensityDesign::new(propensities)?
    } else {
        let mut table = CovariateTable::new();
        for ((name, _), raw) in covariate_columns.iter().zip(covariate_raw) {
            let numeric: Option<Vec<f64>> =
                raw.iter().map(|v| v.parse::<f64>().ok()).collect();
            let column = match numeric {
                Some(values) => CovariateColumn::Numeric(values),
                None => CovariateColumn::Categorical(raw),
            };
            table.push_column(name, column)?;
        }
        PropensityDesign::with_covariates(propensities, table)?
    };
    Ok(StudyFile { design, w_obs: Assignment::from_indicators(&indicators), y_obs, unit_ids })
}

/// Resolves the support flags against the loaded study, rejecting
/// inconsistent combinations up front.
pub fn resolve_support(args: &SupportArgs, study: &StudyFile) -> Result<SupportSpec, CliError> {
    let n = study.design.n_units();
    match args.support {
        SupportKind::Full | SupportKind::Nondegenerate => {
            if args.nt.is_some() || !args.strata.is_empty() {
                return Err(CliError::Input(
                    "--nt and --stratum require --support fixed-nt or --support criterion".into(),
                ));
            }
            Ok(match args.support {
                SupportKind::Full => SupportSpec::Full,
                _ => SupportSpec::Nondegenerate,
            })
        }
        SupportKind::FixedNt => {
            if !args.strata.is_empty() {
                return Err(CliError::Input(
                    "--stratum requires --support criterion".into(),
                ));
            }
            let k = args
                .nt
                .ok_or_else(|| CliError::Input("--support fixed-nt requires --nt".into()))?;
            if k == 0 || k >= n {
                return Err(CliError::Input(format!(
                    "--nt must lie between 1 and {} for {n} units",
                    n - 1
                )));
            }
            Ok(SupportSpec::FixedTotal(k))
        }
        SupportKind::Criterion => {
            if args.nt.is_none() && args.strata.is_empty() {
                return Err(CliError::Input(
                    "--support criterion needs at least one of --nt or --stratum".into(),
                ));
            }
            let mut criterion = AcceptanceCriterion::accept_all();
            if let Some(k) = args.nt {
                if k > n {
                    return Err(CliError::Input(format!(
                        "--nt {k} exceeds the {n} units in the study"
                    )));
                }
                criterion = criterion.and_total_treated(k);
            }
            for spec in &args.strata {
                let covariates = study.design.covariates().ok_or_else(|| {
                    CliError::Input(format!(
                        "--stratum {} names column '{}' but the study file has no x_ columns",
                        spec.raw, spec.column
                    ))
                })?;
                if covariates.column(&spec.column).is_err() {
                    return Err(CliError::Input(format!(
                        "--stratum {} names column '{}' but the study file has columns: {}",
                        spec.raw,
                        spec.column,
                        covariates.column_names().collect::<Vec<_>>().join(", ")
                    )));
                }
                criterion = criterion.and_stratum_treated(
                    &spec.column,
                    spec.value.clone(),
                    spec.count,
                );
            }
            Ok(SupportSpec::Criterion(criterion))
        }
    }
}

fn resolve_statistic(name: &str) -> Result<Box<dyn TestStatistic>, CliError> {
    builtin_statistic(name).ok_or_else(|| {
        CliError::Input(format!("unknown statistic '{name}'; available: mean-diff"))
    })
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        // A failure here means a pool already exists (e.g. under tests);
        // correctness never depends on the pool size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Rounds for the human-facing companion fields: four decimal places,
/// trailing zeros trimmed.
pub fn display_rounded(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.4}");
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    match trimmed {
        "" | "-0" => "0".to_string(),
        t => t.to_string(),
    }
}

fn timing_value(timing: TimingArg, started: Instant) -> Option<f64> {
    match timing {
        TimingArg::Wall => Some(started.elapsed().as_secs_f64() * 1e3),
        TimingArg::None => None,
    }
}

fn support_echo(args: &SupportArgs) -> serde_json::Value {
    json!({
        "support": args.support.as_str(),
        "nt": args.nt,
        "stratum": args.strata.iter().map(|s| s.raw.clone()).collect::<Vec<_>>(),
    })
}

fn engine_echo(args: &EngineArgs) -> serde_json::Value {
    json!({
        "stat": args.stat,
        "method": args.method.as_str(),
        "draws": args.draws,
        "tau": args.tau,
        "sided": args.sided.as_str(),
        "seed": args.seed,
    })
}

/// Runs one sharp-hypothesis test and packages the report.
pub fn cmd_test(args: &TestArgs) -> Result<ResultEnvelope, CliError> {
    init_threads(args.engine.threads)?;
    let study_file = read_study_file(&args.data)?;
    let support = resolve_support(&args.support, &study_file)?;
    let statistic = resolve_statistic(&args.engine.stat)?;
    let study = study_file.to_observed_study()?;
    let hypothesis = SharpHypothesis::additive(args.engine.tau);
    let sidedness = args.engine.sided.to_sidedness();
    let stream = RngStream::new(args.engine.seed);

    let started = Instant::now();
    let report = match args.engine.method {
        MethodArg::Exact => {
            exact_p_value(&study, &hypothesis, statistic.as_ref(), &support, sidedness)?
        }
        MethodArg::Rejection => rejection_p_value(
            &study,
            &hypothesis,
            statistic.as_ref(),
            &support.to_criterion(),
            args.engine.draws,
            sidedness,
            RejectionOptions::default(),
            &mut stream.rng(),
        )?,
        MethodArg::Importance => importance_p_value(
            &study,
            &hypothesis,
            statistic.as_ref(),
            &support.to_criterion(),
            args.engine.draws,
            sidedness,
            &mut stream.rng(),
        )?,
    };
    let timing_ms = timing_value(args.engine.timing, started);

    let mut results = serde_json::to_value(&report)?;
    results["p_value_display"] = json!(display_rounded(report.p_value));
    let mut warnings: Vec<String> = Vec::new();
    if let Some(ess) = report.effective_sample_size {
        if ess < 0.01 * report.draws_used as f64 {
            warnings.push(format!(
                "effective sample size {:.1} is below 1% of the draws; the weights are badly skewed",
                ess
            ));
        }
    }
    Ok(ResultEnvelope {
        command: "test".into(),
        config_echo: json!({
            "data": args.data,
            "support": support_echo(&args.support),
            "engine": engine_echo(&args.engine),
        }),
        seed: args.engine.seed,
        results,
        diagnostics: json!({ "warnings": warnings, "n_units": study_file.design.n_units() }),
        timing_ms,
    })
}

/// Inverts the test over the effect grid and packages the interval.
pub fn cmd_ci(args: &CiArgs) -> Result<ResultEnvelope, CliError> {
    init_threads(args.test.engine.threads)?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Input(format!(
            "--alpha must lie in (0, 1); got {}",
            args.alpha
        )));
    }
    let study_file = read_study_file(&args.test.data)?;
    let support = resolve_support(&args.test.support, &study_file)?;
    let statistic = resolve_statistic(&args.test.engine.stat)?;
    let study = study_file.to_observed_study()?;
    let sidedness = args.test.engine.sided.to_sidedness();
    let grid = TauGrid::new(args.tau_grid.lo, args.tau_grid.hi, args.tau_grid.step)?;
    let engine = match args.test.engine.method {
        MethodArg::Exact => InversionEngine::Exact,
        MethodArg::Rejection => InversionEngine::Rejection {
            m_draws: args.test.engine.draws,
            options: RejectionOptions::default(),
        },
        MethodArg::Importance => InversionEngine::Importance { m_draws: args.test.engine.draws },
    };
    let stream = RngStream::new(args.test.engine.seed);

    let started = Instant::now();
    let inversion = invert_test(
        &study,
        statistic.as_ref(),
        &support,
        &grid,
        args.alpha,
        sidedness,
        engine,
        stream,
    )?;
    let timing_ms = timing_value(args.test.engine.timing, started);

    let mut results = serde_json::to_value(&inversion)?;
    results["point_estimate_display"] = json!(display_rounded(inversion.point_estimate));
    results["ci_display"] = match (inversion.ci_lo, inversion.ci_hi) {
        (Some(lo), Some(hi)) => {
            json!(format!("({}, {})", display_rounded(lo), display_rounded(hi)))
        }
        _ => json!("empty"),
    };
    let mut warnings: Vec<String> = Vec::new();
    if !inversion.contiguous {
        warnings.push(
            "the non-rejected effects are not contiguous; the interval is their convex hull"
                .into(),
        );
    }
    if inversion.ci_lo.is_none() {
        warnings.push("every effect on the grid is rejected at this alpha".into());
    }
    Ok(ResultEnvelope {
        command: "ci".into(),
        config_echo: json!({
            "data": args.test.data,
            "support": support_echo(&args.test.support),
            "engine": engine_echo(&args.test.engine),
            "alpha": args.alpha,
            "tau_grid": args.tau_grid.to_string(),
        }),
        seed: args.test.engine.seed,
        results,
        diagnostics: json!({ "warnings": warnings, "n_units": study_file.design.n_units() }),
        timing_ms,
    })
}

/// Writes the support's assignments as CSV (`assignment,probability,
/// statistic`); returns a summary envelope when the CSV went to a file.
pub fn cmd_enumerate(
    args: &EnumerateArgs,
    stdout: &mut dyn std::io::Write,
) -> Result<Option<ResultEnvelope>, CliError> {
    let study_file = read_study_file(&args.data)?;
    let support = resolve_support(&args.support, &study_file)?;
    let statistic = resolve_statistic(&args.stat)?;
    let study = study_file.to_observed_study()?;
    let hypothesis = SharpHypothesis::additive(args.tau);

    let started = Instant::now();
    let normalizer = support_normalizer(&study_file.design, &support)?;
    let write_rows = |writer: &mut csv::Writer<&mut dyn std::io::Write>| -> Result<u64, CliError> {
        writer.write_record(["assignment", "probability", "statistic"])?;
        let mut outcomes = Vec::new();
        let mut rows = 0u64;
        for w in enumerate_support(&study_file.design, &support, DEFAULT_ENUMERATION_LIMIT)? {
            let probability = study_file.design.assignment_kernel(&w) / normalizer;
            hypothesis.impute_into(&study, &w, &mut outcomes);
            let statistic_value = statistic.evaluate(&outcomes, &w);
            writer.write_record([
                w.to_string(),
                probability.to_string(),
                statistic_value.to_string(),
            ])?;
            rows += 1;
        }
        writer.flush()?;
        Ok(rows)
    };

    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            let sink: &mut dyn std::io::Write = &mut file;
            let mut writer = csv::Writer::from_writer(sink);
            let rows = write_rows(&mut writer)?;
            drop(writer);
            let timing_ms = timing_value(args.timing, started);
            Ok(Some(ResultEnvelope {
                command: "enumerate".into(),
                config_echo: json!({
                    "data": args.data,
                    "support": support_echo(&args.support),
                    "stat": args.stat,
                    "tau": args.tau,
                    "out": path,
                }),
                seed: 0,
                results: json!({
                    "rows": rows,
                    "normalizer": normalizer,
                    "normalizer_display": display_rounded(normalizer),
                    "out": path,
                }),
                diagnostics: json!({ "warnings": [] }),
                timing_ms,
            }))
        }
        None => {
            let sink: &mut dyn std::io::Write = stdout;
            let mut writer = csv::Writer::from_writer(sink);
            write_rows(&mut writer)?;
            Ok(None)
        }
    }
}

/// Runs the simulation bench and writes its three files into `--out`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<ResultEnvelope, CliError> {
    init_threads(args.threads)?;
    let mut config: SimConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    std::fs::create_dir_all(&args.out)?;
    let power_path = args.out.join("power.csv");
    let compare_path = args.out.join("rs_vs_is.csv");
    let manifest_path = args.out.join("manifest.json");

    let started = Instant::now();
    let power = run_power_study(&config)?;
    power.table.write_csv_file(&power_path)?;
    let comparison = run_rs_vs_is_study(&config, &args.compare_m)?;
    comparison.table.write_csv_file(&compare_path)?;
    write_run_manifest(&manifest_path, &config)?;
    let timing_ms = timing_value(args.timing, started);

    let timings: Vec<serde_json::Value> = match args.timing {
        TimingArg::Wall => comparison
            .timings
            .iter()
            .map(|t| json!({ "method": t.method, "total_ms": t.total_ms }))
            .collect(),
        TimingArg::None => Vec::new(),
    };
    Ok(ResultEnvelope {
        command: "simulate".into(),
        config_echo: serde_json::to_value(&config)?,
        seed: config.seed,
        results: json!({
            "power_csv": power_path,
            "rs_vs_is_csv": compare_path,
            "manifest": manifest_path,
            "power_rows": power.table.rows.len(),
            "rs_vs_is_rows": comparison.table.rows.len(),
            "replications": config.replications,
            "engine_timings": timings,
        }),
        diagnostics: json!({ "warnings": [] }),
        timing_ms,
    })
}

fn emit_envelope(
    envelope: &ResultEnvelope,
    out: Option<&Path>,
    stdout: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(envelope)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Executes a parsed command line, writing results to `--out` or stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Test(args) => {
            let envelope = cmd_test(&args)?;
            emit_envelope(&envelope, args.engine.out.as_deref(), &mut stdout)
        }
        Command::Ci(args) => {
            let envelope = cmd_ci(&args)?;
            emit_envelope(&envelope, args.test.engine.out.as_deref(), &mut stdout)
        }
        Command::Simulate(args) => {
            let envelope = cmd_simulate(&args)?;
            emit_envelope(&envelope, None, &mut stdout)
        }
        Command::Enumerate(args) => {
            if let Some(envelope) = cmd_enumerate(&args, &mut stdout)? {
                emit_envelope(&envelope, None, &mut stdout)?;
            }
            Ok(())
        }
    }
}
