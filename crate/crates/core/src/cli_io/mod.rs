//! Config files, the `hedgerate` command line, and result files.
//!
//! Each run resolves its output directory as `--output`, then the config's
//! `output_path`, then `$HEDGERATE_OUTPUT_DIR`, then `./results`. Into it go
//! the command's CSV, the resolved config (`config.toml`) and one JSON line
//! appended to `summary.jsonl`.
//!
//! | command    | CSV                | columns |
//! |------------|--------------------|---------|
//! | `coeffs`   | `coefficients.csv` | `n, c_n` |
//! | `oracle`   | `oracle.csv`       | `n, analytic_error, series_error, a_total, b_total, truncation_residual, flagged` |
//! | `simulate` | `simulate.csv`     | `n, mc_error, mc_std_error, mean_error, mean_error_std_error, analytic_error, n_paths, seed` |
//! | `sweep`    | `sweep.csv`        | `n, analytic_error, mc_error, mc_std_error` |
//! | `fit`      | `fit.csv`          | `n, analytic_error, fitted_error` |
//! | `report`   | `smoothness.csv`   | `theta, sum_criterion, integral_criterion` |
//!
//! Exit status is 0 on success, 2 for usage or config problems and 3 for
//! failures while running.

mod config;
mod records;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{parse_config, ConfigErrors, ExperimentConfig, FieldError, SCHEMA_VERSION};
pub use records::{append_summary, digest, emit_csv, read_csv, Cell, CsvRecord, CsvTable, RecordError};

use crate::analytic_error::net_error_l2;
use crate::hedging_simulator::mc_error_stats;
use crate::hermite_chaos::{chaos_coefficients, ChaosCoefficients, QuadratureSettings, TailIndex};
use crate::rate_lab::{default_theta_grid, fit_power_law, rate_sweep, smoothness_report, SweepSpec};
use crate::singular_model::{SingularVolatility, TimeNet};

pub const OUTPUT_DIR_ENV: &str = "HEDGERATE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";
pub const SUMMARY_FILE: &str = "summary.jsonl";
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hedgerate", version, about = "Discrete hedging error rates under singular volatility")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for Monte Carlo. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "n-paths", global = true)]
    pub n_paths: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chaos coefficients of the payoff.
    Coeffs,
    /// Analytic mean-square error on each equidistant net.
    Oracle,
    /// One Monte Carlo run on a single equidistant net.
    Simulate {
        /// Number of intervals; defaults to the largest of `n_values`.
        #[arg(long)]
        intervals: Option<usize>,
    },
    /// Full rate experiment: analytic and simulated errors plus the fitted slope.
    Sweep,
    /// Re-fit the slope from a stored sweep CSV.
    Fit {
        /// Defaults to `sweep.csv` in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Smoothness criteria of the payoff over a θ grid.
    Report {
        /// Comma-separated; defaults to 0.1,…,0.9.
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Oracle => "oracle",
            Command::Simulate { .. } => "simulate",
            Command::Sweep => "sweep",
            Command::Fit { .. } => "fit",
            Command::Report { .. } => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_CONFIG,
            CliError::Records(_) | CliError::Model(_) => EXIT_RUNTIME,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub csv: PathBuf,
    pub summary: serde_json::Value,
}

/// Parses `argv` (including the program name), runs it and returns the exit
/// status. Errors go to stderr.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("hedgerate {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Runs a parsed command line, on a dedicated pool when `--workers` is set.
pub fn execute(cli: &Cli) -> Result<RunOutput, CliError> {
    match cli.workers {
        Some(0) => Err(CliError::Usage("--workers must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| RecordError::io(path, e))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n_paths) = cli.n_paths {
        config.n_paths = n_paths;
    }
    config.validate()?;
    Ok(config)
}

fn output_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    if let Some(dir) = &cli.output {
        return dir.clone();
    }
    if let Some(dir) = config.and_then(|c| c.output_path.as_ref()) {
        return PathBuf::from(dir);
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

/// Digest of everything that determines the numbers, i.e. the resolved
/// config without its output location.
pub fn config_digest(config: &ExperimentConfig) -> String {
    digest(&ExperimentConfig { output_path: None, ..config.clone() }.to_toml())
}

struct Run {
    config: ExperimentConfig,
    dir: PathBuf,
    digest: String,
}

impl Run {
    fn start(cli: &Cli) -> Result<Self, CliError> {
        let mut config = load_config(cli)?;
        let dir = output_dir(cli, Some(&config));
        std::fs::create_dir_all(&dir).map_err(|e| RecordError::io(&dir, e))?;
        let digest = config_digest(&config);
        config.output_path = Some(dir.to_string_lossy().into_owned());
        records::write_text(&dir.join(RESOLVED_CONFIG_FILE), &config.to_toml())?;
        Ok(Run { config, dir, digest })
    }

    fn model(&self) -> Result<SingularVolatility, CliError> {
        Ok(SingularVolatility::new(self.config.beta, self.config.horizon)?)
    }

    fn coefficients(&self) -> Result<ChaosCoefficients, CliError> {
        Ok(chaos_coefficients(&self.config.payoff, self.config.truncation, &QuadratureSettings::default())?)
    }

    fn finish<R: CsvRecord>(
        &self,
        command: &str,
        file: &str,
        rows: &[R],
        mut summary: serde_json::Value,
    ) -> Result<RunOutput, CliError> {
        let csv = self.dir.join(file);
        emit_csv(rows, &csv)?;
        summary["command"] = json!(command);
        summary["config_digest"] = json!(self.digest);
        summary["csv"] = json!(csv.to_string_lossy());
        append_summary(&self.dir.join(SUMMARY_FILE), &summary)?;
        Ok(RunOutput { output_dir: self.dir.clone(), csv, summary })
    }
}

fn dispatch(cli: &Cli) -> Result<RunOutput, CliError> {
    match &cli.command {
        Command::Coeffs => coeffs(cli),
        Command::Oracle => oracle(cli),
        Command::Simulate { intervals } => simulate(cli, *intervals),
        Command::Sweep => sweep(cli),
        Command::Fit { input } => fit(cli, input.as_deref()),
        Command::Report { thetas } => report(cli, thetas.as_deref()),
    }
}

struct CoefficientRow(u64, f64);

impl CsvRecord for CoefficientRow {
    const COLUMNS: &'static [&'static str] = &["n", "c_n"];
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Int(self.0), Cell::Float(self.1)]
    }
}

fn coeffs(cli: &Cli) -> Result<RunOutput, CliError> {
    let run = Run::start(cli)?;
    let c = run.coefficients()?;
    let rows: Vec<_> = c.coeffs().iter().enumerate().map(|(n, &v)| CoefficientRow(n as u64, v)).collect();
    let summary = json!({
        "payoff": run.config.payoff.kind_name(),
        "truncation": c.truncation_order(),
        "l2_norm_sq": c.l2_norm_sq_estimate(),
        "parseval_residual": c.parseval_residual(),
    });
    run.finish("coeffs", "coefficients.csv", &rows, summary)
}

struct OracleRow {
    n: usize,
    value: f64,
    series: f64,
    a_total: f64,
    b_total: f64,
    residual: f64,
    flagged: bool,
}

impl CsvRecord for OracleRow {
    const COLUMNS: &'static [&'static str] =
        &["n", "analytic_error", "series_error", "a_total", "b_total", "truncation_residual", "flagged"];
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.n as u64),
            Cell::Float(self.value),
            Cell::Float(self.series),
            Cell::Float(self.a_total),
            Cell::Float(self.b_total),
            Cell::Float(self.residual),
            Cell::Int(self.flagged as u64),
        ]
    }
}

fn sorted_n_values(config: &ExperimentConfig) -> Vec<usize> {
    let mut n = config.n_values.clone();
    n.sort_unstable();
    n.dedup();
    n
}

fn oracle(cli: &Cli) -> Result<RunOutput, CliError> {
    let run = Run::start(cli)?;
    let (model, c) = (run.model()?, run.coefficients()?);
    let mut rows = Vec::new();
    for n in sorted_n_values(&run.config) {
        let e = net_error_l2(&c, &model, &TimeNet::equidistant(n, model.horizon())?)?;
        rows.push(OracleRow {
            n,
            value: e.value(),
            series: e.series_value(),
            a_total: e.intervals.iter().map(|i| i.a_term).sum(),
            b_total: e.intervals.iter().map(|i| i.b_term).sum(),
            residual: e.truncation_residual,
            flagged: e.is_flagged(),
        });
    }
    let summary = json!({
        "beta": run.config.beta,
        "flagged": rows.iter().filter(|r| r.flagged).count(),
        "parseval_residual": c.parseval_residual(),
    });
    run.finish("oracle", "oracle.csv", &rows, summary)
}

struct SimulateRow {
    n: usize,
    l2: f64,
    l2_se: f64,
    mean: f64,
    mean_se: f64,
    analytic: f64,
    n_paths: u64,
    seed: u64,
}

impl CsvRecord for SimulateRow {
    const COLUMNS: &'static [&'static str] =
        &["n", "mc_error", "mc_std_error", "mean_error", "mean_error_std_error", "analytic_error", "n_paths", "seed"];
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.n as u64),
            Cell::Float(self.l2),
            Cell::Float(self.l2_se),
            Cell::Float(self.mean),
            Cell::Float(self.mean_se),
            Cell::Float(self.analytic),
            Cell::Int(self.n_paths),
            Cell::Int(self.seed),
        ]
    }
}

fn simulate(cli: &Cli, intervals: Option<usize>) -> Result<RunOutput, CliError> {
    let run = Run::start(cli)?;
    if run.config.n_paths == 0 {
        return Err(CliError::Usage("simulate needs n_paths > 0".into()));
    }
    let n = match intervals {
        Some(0) => return Err(CliError::Usage("--intervals must be positive".into())),
        Some(n) => n,
        None => *sorted_n_values(&run.config).last().expect("validated non-empty"),
    };
    let (model, c) = (run.model()?, run.coefficients()?);
    let net = TimeNet::equidistant(n, model.horizon())?;
    let stats = mc_error_stats(&c, &model, &net, Some(&run.config.payoff), run.config.n_paths, run.config.seed)?;
    let analytic = net_error_l2(&c, &model, &net)?.value();
    let row = SimulateRow {
        n,
        l2: stats.l2.mean,
        l2_se: stats.l2.std_error,
        mean: stats.mean_error.mean,
        mean_se: stats.mean_error.std_error,
        analytic,
        n_paths: run.config.n_paths,
        seed: run.config.seed,
    };
    let summary = json!({
        "n": n,
        "mc_error": row.l2,
        "mc_std_error": row.l2_se,
        "analytic_error": analytic,
        "z_score": (row.l2 - analytic) / row.l2_se,
    });
    run.finish("simulate", "simulate.csv", &[row], summary)
}

struct SweepRow {
    n: usize,
    analytic: f64,
    mc: f64,
    mc_se: f64,
}

impl CsvRecord for SweepRow {
    const COLUMNS: &'static [&'static str] = &["n", "analytic_error", "mc_error", "mc_std_error"];
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Int(self.n as u64), Cell::Float(self.analytic), Cell::Float(self.mc), Cell::Float(self.mc_se)]
    }
}

fn sweep(cli: &Cli) -> Result<RunOutput, CliError> {
    let run = Run::start(cli)?;
    let (model, c) = (run.model()?, run.coefficients()?);
    let result = rate_sweep(&SweepSpec {
        coefficients: &c,
        model: &model,
        payoff: Some(&run.config.payoff),
        n_values: &run.config.n_values,
        n_paths: run.config.n_paths,
        seed: run.config.seed,
        theta: run.config.theta,
        config_digest: run.digest.clone(),
    })?;
    let rows: Vec<_> = result
        .points()
        .into_iter()
        .map(|p| SweepRow { n: p.n, analytic: p.analytic_error, mc: p.mc.mean, mc_se: p.mc.std_error })
        .collect();
    let summary = json!({
        "beta": result.beta,
        "fitted_slope": result.fitted_slope,
        "slope_ci": [result.slope_ci.0, result.slope_ci.1],
        "intercept": result.fit.intercept,
        "fitted_c2": result.fitted_c2,
        "theoretical_slope": result.theoretical_slope,
        "theta_used": result.theta_used,
        "n_paths": run.config.n_paths,
        "seed": run.config.seed,
        "parseval_residual": c.parseval_residual(),
    });
    run.finish("sweep", "sweep.csv", &rows, summary)
}

struct FitRow {
    n: f64,
    analytic: f64,
    fitted: f64,
}

impl CsvRecord for FitRow {
    const COLUMNS: &'static [&'static str] = &["n", "analytic_error", "fitted_error"];
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Int(self.n as u64), Cell::Float(self.analytic), Cell::Float(self.fitted)]
    }
}

fn fit(cli: &Cli, input: Option<&Path>) -> Result<RunOutput, CliError> {
    let config = match &cli.config {
        Some(_) => Some(load_config(cli)?),
        None => None,
    };
    let dir = output_dir(cli, config.as_ref());
    let input = input.map_or_else(|| dir.join("sweep.csv"), Path::to_path_buf);
    let table = read_csv(&input)?;
    let n = table.column("n")?;
    let errors = table.column("analytic_error")?;
    let fit = fit_power_law(&n, &errors)?;
    let rows: Vec<_> = n
        .iter()
        .zip(&errors)
        .map(|(&n, &analytic)| FitRow { n, analytic, fitted: fit.intercept.exp() * n.powf(fit.slope) })
        .collect();
    std::fs::create_dir_all(&dir).map_err(|e| RecordError::io(&dir, e))?;
    let csv = dir.join("fit.csv");
    emit_csv(&rows, &csv)?;
    let summary = json!({
        "command": "fit",
        "input": input.to_string_lossy(),
        "fitted_slope": fit.slope,
        "slope_ci": [fit.slope_ci.0, fit.slope_ci.1],
        "intercept": fit.intercept,
        "fitted_c2": fit.intercept.exp(),
        "csv": csv.to_string_lossy(),
    });
    append_summary(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(RunOutput { output_dir: dir, csv, summary })
}

struct SmoothnessRow(f64, f64, f64);

impl CsvRecord for SmoothnessRow {
    const COLUMNS: &'static [&'static str] = &["theta", "sum_criterion", "integral_criterion"];
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Float(self.0), Cell::Float(self.1), Cell::Float(self.2)]
    }
}

fn report(cli: &Cli, thetas: Option<&[f64]>) -> Result<RunOutput, CliError> {
    let run = Run::start(cli)?;
    let c = run.coefficients()?;
    let grid = thetas.map_or_else(default_theta_grid, <[f64]>::to_vec);
    let r = smoothness_report(&c, &grid)?;
    let rows: Vec<_> =
        r.rows.iter().map(|row| SmoothnessRow(row.theta, row.sum_criterion, row.integral_criterion)).collect();
    let critical = match r.tail_index {
        TailIndex::SuperPolynomial => json!(null),
        TailIndex::Critical { theta, .. } => json!(theta),
    };
    let summary = json!({
        "payoff": run.config.payoff.kind_name(),
        "truncation": r.truncation_order,
        "critical_theta": critical,
        "parseval_residual": r.parseval_residual,
    });
    run.finish("report", "smoothness.csv", &rows, summary)
}
