//! Command-line front end: CSV ingestion, order construction, subcommands
//! and versioned JSON reports.
//!
//! Exit codes: 0 success, 2 unreadable or unparseable input, 3 invalid
//! input, 4 failed verification.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{calibration_report, CalibrationReport, ForecastProfile};
use crate::distributions::{merged_grid, sorted_unique, StepCdf};
use crate::error::IclError;
use crate::icl::{icl_fit, icl_quantile};
use crate::oracle::Counterexample;
use crate::scoring::{brier_score, crps, crps_via_quantiles, quantile_score};
use crate::space::{preorder_from_covariates, CovariateTable, FiniteSpace, Preorder};
use crate::verify::{run_suite, Suite, SuiteOutcome};

/// Value of the top-level `schema` key of every report.
pub const SCHEMA: &str = "icl/1";

/// Relative tolerance for the two CRPS representations.
pub const CRPS_AGREEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Library(#[from] IclError),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse(_) | CliError::Write { .. } => 2,
            CliError::Invalid(_) | CliError::Library(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "icl",
    version,
    about = "Isotonic conditional laws on finite data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the conditional law of the response given a partial order on the rows.
    Fit(FitArgs),
    /// Score forecasts against the responses of a data set.
    Score(ScoreArgs),
    /// Run the five calibration checks on forecasts.
    Calibrate(CalibrateArgs),
    /// Run a randomized verification battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Name of an optional column of positive weights.
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `componentwise`, `column:<index or name>` or `file:<edge list>`.
    #[arg(long, default_value = "componentwise")]
    pub order: String,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// A fit report, or a JSON array of forecasts.
    pub fit: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// A fit report, or a JSON array of forecasts.
    pub forecast: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, env = "ICL_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Maximum number of atoms per random instance.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Number of random instances; defaults depend on the suite.
    #[arg(long)]
    pub count: Option<usize>,
    /// Random kernels compared per instance in the universality suite.
    #[arg(long, default_value_t = 1000)]
    pub members: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A CSV data set: covariates, response and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub covariate_names: Vec<String>,
    pub covariates: CovariateTable,
    pub y: Vec<f64>,
    pub space: FiniteSpace,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_cell(cell: &str, row: usize, column: &str) -> CliResult<f64> {
    let v: f64 = cell.parse().map_err(|_| {
        CliError::Parse(format!(
            "row {row}, column {column:?}: {cell:?} is not a number"
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Parse(format!(
            "row {row}, column {column:?}: {cell:?} is not finite"
        )));
    }
    Ok(v)
}

/// Every column other than `response` and `weights` is a covariate.
pub fn parse_dataset(text: &str, response: &str, weights: Option<&str>) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Invalid(format!("no column named {name:?}")))
    };
    let y_col = find(response)?;
    let w_col = weights.map(find).transpose()?;
    let cov_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != y_col && Some(c) != w_col)
        .collect();
    if cov_cols.is_empty() {
        return Err(CliError::Invalid("no covariate columns".into()));
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut masses = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse(e.to_string()))?;
        let row = r + 1;
        let cell = |c: usize| parse_cell(&record[c], row, &headers[c]);
        rows.push(
            cov_cols
                .iter()
                .map(|&c| cell(c))
                .collect::<CliResult<Vec<f64>>>()?,
        );
        y.push(cell(y_col)?);
        masses.push(match w_col {
            Some(c) => cell(c)?,
            None => 1.0,
        });
    }
    if y.is_empty() {
        return Err(CliError::Invalid("no data rows".into()));
    }
    Ok(Dataset {
        covariate_names: cov_cols.iter().map(|&c| headers[c].clone()).collect(),
        covariates: CovariateTable::new(rows)?,
        y,
        space: FiniteSpace::from_unnormalized(&masses)?,
    })
}

pub fn read_dataset(data: &DataArgs) -> CliResult<Dataset> {
    parse_dataset(
        &read_text(&data.input)?,
        &data.response,
        data.weights.as_deref(),
    )
}

/// Where the partial order on the rows comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderSource {
    /// Componentwise order of all covariate columns.
    Componentwise,
    /// Total preorder by one covariate column, given by index or name.
    Column(String),
    /// Edge list file with one `i j` pair (meaning row `i` below row `j`) per line.
    File(PathBuf),
}

impl FromStr for OrderSource {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s == "componentwise" {
            Ok(OrderSource::Componentwise)
        } else if let Some(c) = s.strip_prefix("column:") {
            Ok(OrderSource::Column(c.to_string()))
        } else if let Some(p) = s.strip_prefix("file:") {
            Ok(OrderSource::File(PathBuf::from(p)))
        } else {
            Err(CliError::Parse(format!(
                "unknown order {s:?}; expected componentwise, column:<i> or file:<path>"
            )))
        }
    }
}

/// Parses `i j` pairs, one per line; blank lines and `#` comments are skipped.
pub fn parse_edges(text: &str, n: usize) -> CliResult<Preorder> {
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| CliError::Parse(format!("edge line {}: {s:?} is not an index", k + 1)))
        };
        if parts.len() != 2 {
            return Err(CliError::Parse(format!(
                "edge line {}: expected two indices",
                k + 1
            )));
        }
        let (i, j) = (idx(parts[0])?, idx(parts[1])?);
        if i >= n || j >= n {
            return Err(CliError::Invalid(format!(
                "edge line {}: index out of range for {n} rows",
                k + 1
            )));
        }
        pairs.push((i, j));
    }
    Ok(Preorder::from_pairs(n, &pairs)?)
}

pub fn build_order(source: &OrderSource, data: &Dataset) -> CliResult<Preorder> {
    match source {
        OrderSource::Componentwise => Ok(preorder_from_covariates(&data.space, &data.covariates)?),
        OrderSource::Column(c) => {
            let idx = match c.parse::<usize>() {
                Ok(i) if i < data.covariate_names.len() => i,
                Ok(i) => {
                    return Err(CliError::Invalid(format!(
                        "covariate column {i} out of range ({} columns)",
                        data.covariate_names.len()
                    )))
                }
                Err(_) => data
                    .covariate_names
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| CliError::Invalid(format!("no covariate named {c:?}")))?,
            };
            Ok(Preorder::by_values(&data.covariates.column(idx)))
        }
        OrderSource::File(path) => parse_edges(&read_text(path)?, data.len()),
    }
}

/// Forecasts from a fit report (`result.forecasts`) or a bare JSON array.
pub fn parse_forecasts(text: &str) -> CliResult<Vec<StepCdf>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let list = if value.is_array() {
        value
    } else {
        value
            .get("result")
            .and_then(|r| r.get("forecasts"))
            .cloned()
            .ok_or_else(|| {
                CliError::Parse("expected an array of forecasts or a fit report".into())
            })?
    };
    serde_json::from_value(list).map_err(|e| CliError::Parse(format!("forecasts: {e}")))
}

fn read_forecasts(path: &Path, n: usize) -> CliResult<Vec<StepCdf>> {
    let forecasts = parse_forecasts(&read_text(path)?)?;
    if forecasts.len() != n {
        return Err(CliError::Invalid(format!(
            "{} forecasts for {n} rows",
            forecasts.len()
        )));
    }
    Ok(forecasts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Envelope shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<C, R> {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub config: C,
    pub result: R,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub input: String,
    pub response: String,
    pub weights: Option<String>,
}

impl From<&DataArgs> for DataConfig {
    fn from(d: &DataArgs) -> Self {
        Self {
            input: d.input.display().to_string(),
            response: d.response.clone(),
            weights: d.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub data: DataConfig,
    pub order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub alpha: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n: usize,
    pub covariates: Vec<String>,
    /// Strict pairs `(i, j)` of the order: row `i` below row `j`.
    pub order_pairs: Vec<(usize, usize)>,
    pub thresholds: Vec<f64>,
    /// Row-major: `cdf_matrix[i][k]` is the fitted cdf of row `i` at `thresholds[k]`.
    pub cdf_matrix: Vec<Vec<f64>>,
    pub forecasts: Vec<StepCdf>,
    /// Lower quantiles at levels 0.05, 0.10, ..., 0.95 and every fitted cdf value.
    pub quantiles: Vec<QuantileCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub data: DataConfig,
    pub forecasts: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub at: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub n: usize,
    pub mean_crps: f64,
    pub mean_crps_quantile: f64,
    /// Mean Brier score of the threshold forecasts, per threshold `z`.
    pub brier: Vec<GridScore>,
    /// Mean quantile score of the lower quantiles, per level `alpha`.
    pub quantile_scores: Vec<GridScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub data: DataConfig,
    pub forecasts: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFlags {
    pub auto: bool,
    pub isotonic: bool,
    pub threshold: bool,
    pub quantile: bool,
    pub pit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrateResult {
    pub n: usize,
    pub flags: CalibrationFlags,
    pub hierarchy_holds: bool,
    pub checks: CalibrationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub seed: u64,
    pub max_atoms: usize,
    pub count: usize,
    pub members: usize,
}

/// A frozen counterexample as stored in the fixtures directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleFixture {
    pub schema: String,
    pub counterexample: Counterexample,
}

impl CounterexampleFixture {
    pub fn new(counterexample: Counterexample) -> Self {
        Self {
            schema: SCHEMA.into(),
            counterexample,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("fixtures serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if f.schema != SCHEMA {
            return Err(CliError::Parse(format!(
                "unsupported schema {:?}",
                f.schema
            )));
        }
        Ok(f)
    }
}

fn standard_levels() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

pub fn fit_result(data: &Dataset, order: &Preorder) -> CliResult<FitResult> {
    let fit = icl_fit(&data.space, order, &data.y)?;
    let mut levels = standard_levels();
    levels.extend(
        fit.columns()
            .iter()
            .flatten()
            .copied()
            .filter(|a| *a > 0.0 && *a < 1.0),
    );
    sorted_unique(&mut levels);
    let quantiles = levels
        .into_iter()
        .map(|alpha| {
            Ok(QuantileCurve {
                alpha,
                values: icl_quantile(&fit, alpha)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(FitResult {
        n: data.len(),
        covariates: data.covariate_names.clone(),
        order_pairs: order.strict_pairs(),
        thresholds: fit.thresholds().to_vec(),
        cdf_matrix: fit.cdf_matrix(),
        forecasts: fit.rows().to_vec(),
        quantiles,
    })
}

pub fn score_result(data: &Dataset, forecasts: &[StepCdf]) -> CliResult<ScoreResult> {
    let w = data.space.weights();
    let mean = |f: &dyn Fn(usize) -> f64| (0..data.len()).map(|i| w[i] * f(i)).sum::<f64>();
    let mean_crps = mean(&|i| crps(&forecasts[i], data.y[i]));
    let mean_crps_quantile = mean(&|i| crps_via_quantiles(&forecasts[i], data.y[i]));
    if (mean_crps - mean_crps_quantile).abs() > CRPS_AGREEMENT_TOL * mean_crps.abs().max(1.0) {
        return Err(CliError::Verification(format!(
            "CRPS representations disagree: {mean_crps} vs {mean_crps_quantile}"
        )));
    }
    let mut grid = merged_grid(forecasts);
    grid.extend(data.y.iter().copied());
    sorted_unique(&mut grid);
    let brier = grid
        .iter()
        .map(|&z| GridScore {
            at: z,
            mean: mean(&|i| {
                let hit = if data.y[i] <= z { 1.0 } else { 0.0 };
                brier_score(forecasts[i].cdf(z), hit)
            }),
        })
        .collect();
    let quantile_scores = standard_levels()
        .into_iter()
        .map(|alpha| {
            let q = forecasts
                .iter()
                .map(|f| f.lower_quantile(alpha))
                .collect::<crate::error::Result<Vec<f64>>>()?;
            Ok(GridScore {
                at: alpha,
                mean: mean(&|i| quantile_score(alpha, q[i], data.y[i])),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ScoreResult {
        n: data.len(),
        mean_crps,
        mean_crps_quantile,
        brier,
        quantile_scores,
    })
}

pub fn calibrate_result(data: &Dataset, forecasts: Vec<StepCdf>) -> CliResult<CalibrateResult> {
    let profile = ForecastProfile::new(data.space.clone(), forecasts, data.y.clone())?;
    let checks = calibration_report(&profile)?;
    Ok(CalibrateResult {
        n: data.len(),
        flags: CalibrationFlags {
            auto: checks.auto.holds,
            isotonic: checks.isotonic.holds,
            threshold: checks.threshold.holds,
            quantile: checks.quantile.holds,
            pit: checks.pit_bounds.holds,
        },
        hierarchy_holds: checks.hierarchy_holds(),
        checks,
    })
}

fn envelope<C: Serialize, R: Serialize>(
    command: &str,
    config: C,
    result: R,
    start: Instant,
) -> CliResult<String> {
    let report = Report {
        schema: SCHEMA.into(),
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
        result,
        timing: Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Invalid(format!("report is not serializable: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// The outcome of a command: the report text, where it goes, and whether a
/// verification battery failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report: String,
    pub out: Option<PathBuf>,
    pub verification_failed: bool,
}

/// Runs a command without touching standard output.
pub fn execute(cli: &Cli) -> CliResult<Output> {
    let start = Instant::now();
    match &cli.command {
        Command::Fit(args) => {
            let source: OrderSource = args.order.parse()?;
            let data = read_dataset(&args.data)?;
            let order = build_order(&source, &data)?;
            let result = fit_result(&data, &order)?;
            let config = FitConfig {
                data: (&args.data).into(),
                order: args.order.clone(),
            };
            Ok(Output {
                report: envelope("fit", config, result, start)?,
                out: args.out.clone(),
                verification_failed: false,
            })
        }
        Command::Score(args) => {
            let data = read_dataset(&args.data)?;
            let forecasts = read_forecasts(&args.fit, data.len())?;
            let result = score_result(&data, &forecasts)?;
            let config = ScoreConfig {
                data: (&args.data).into(),
                forecasts: args.fit.display().to_string(),
            };
            Ok(Output {
                report: envelope("score", config, result, start)?,
                out: args.out.clone(),
                verification_failed: false,
            })
        }
        Command::Calibrate(args) => {
            let data = read_dataset(&args.data)?;
            let forecasts = read_forecasts(&args.forecast, data.len())?;
            let result = calibrate_result(&data, forecasts)?;
            let config = CalibrateConfig {
                data: (&args.data).into(),
                forecasts: args.forecast.display().to_string(),
            };
            Ok(Output {
                report: envelope("calibrate", config, result, start)?,
                out: args.out.clone(),
                verification_failed: false,
            })
        }
        Command::Verify(args) => {
            let count = args.count.unwrap_or_else(|| args.suite.default_count());
            let outcome: SuiteOutcome =
                run_suite(args.suite, args.seed, args.n, count, args.members)?;
            let config = VerifyConfig {
                suite: args.suite,
                seed: args.seed,
                max_atoms: outcome.max_atoms,
                count: outcome.checked,
                members: args.members,
            };
            let failed = !outcome.passed;
            Ok(Output {
                report: envelope("verify", config, outcome, start)?,
                out: args.out.clone(),
                verification_failed: failed,
            })
        }
    }
}

/// Runs a command, writes its report and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|output| {
        match &output.out {
            Some(path) => fs::write(path, &output.report).map_err(|e| CliError::Write {
                path: path.display().to_string(),
                message: e.to_string(),
            })?,
            None => print!("{}", output.report),
        }
        if output.verification_failed {
            Err(CliError::Verification(
                "see the report for failing seeds".into(),
            ))
        } else {
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
