//! Command-line front end.
//!
//! Exit codes: 0 success, 1 user or input error, 2 numerical failure.

pub mod data;
pub mod synth;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

pub use data::{CsvDataset, LoadedData};
pub use synth::{synthetic_firms, SyntheticFirms};

use crate::baselines::MaxScoreConfig;
use crate::error::Error;
use crate::estimator::{Dataset, DirectionEstimate, Method};
use crate::inference::{self, AsymptoticCovariance, WaldResult};
use crate::simulate::{self, PaperTable, Scenario, SimulationTable};

/// Two-sided normal critical value at the 0.05 level.
const Z_CRIT_05: f64 = 1.959_963_984_540_054;
/// |mean| / (sd / √n) above this marks a column as not centered (two-sided 0.001).
const MEAN_ZERO_Z: f64 = 3.290_526_731_491_926;

pub const SE_LABEL: &str = "plug-in asymptotic SE";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("parse error{}, column '{column}': {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Parse {
        row: Option<usize>,
        column: String,
        message: String,
    },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Parse { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "dirset", version, about = "Direction estimation for single-index models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the index direction from a CSV file.
    Estimate(EstimateArgs),
    /// Wald test of a hypothesized direction.
    Test(TestArgs),
    /// Run the scenarios in a JSON config file.
    Simulate(SimulateArgs),
    /// Rerun one of the built-in comparison tables and diff it against the published values.
    Reproduce(ReproduceArgs),
    /// Write a synthetic firm-level export dataset (probit model, known coefficients).
    SynthFirms(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV file (RFC 4180, header row).
    #[arg(long)]
    pub input: PathBuf,
    /// Response column name.
    #[arg(long)]
    pub response: String,
    /// Covariate columns, comma separated; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// The file has no header row; columns are then named col1, col2, ...
    #[arg(long)]
    pub no_header: bool,
}

impl DataArgs {
    fn spec(&self) -> CsvDataset {
        CsvDataset {
            path: self.input.clone(),
            response_column: self.response.clone(),
            covariate_columns: self.covariates.clone(),
            header: !self.no_header,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// new | new-uncentered | ms | lmrc | probit
    #[arg(long, default_value = "new", value_parser = parse_method)]
    pub method: Method,
    /// Emit a JSON report.
    #[arg(long)]
    pub json: bool,
    /// Seed for the maximum score search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random starts for the maximum score search.
    #[arg(long, default_value_t = MaxScoreConfig::default().n_random_starts)]
    pub ms_starts: usize,
    /// Allow the uncentered estimator's covariance on a design that is not mean zero.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Hypothesized direction, comma separated; normalized if not unit length.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub beta0: Vec<f64>,
    /// Significance levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub alpha: Vec<f64>,
    /// new | new-uncentered
    #[arg(long, default_value = "new", value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON array of scenarios.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path; the markdown table goes next to it with a .md extension.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep one β per scenario instead of redrawing it every repetition.
    #[arg(long)]
    pub fixed_beta: bool,
    /// Read the mixture error's second parameters as standard deviations.
    #[arg(long)]
    pub mixture_sd: bool,
    /// Read Case III's error as 0.4·Z₁ + 0.6·Z₂ instead of a mixture.
    #[arg(long)]
    pub mixture_sum: bool,
}

impl SimulateArgs {
    fn overrides(&self) -> DesignOverrides {
        DesignOverrides { fixed_beta: self.fixed_beta, mixture_sd: self.mixture_sd, mixture_sum: self.mixture_sum }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// table1 | table2 | table3
    pub table: PaperTable,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    /// Repetitions per cell.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Optional CSV output path (markdown and diff are written alongside).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub fixed_beta: bool,
    #[arg(long)]
    pub mixture_sd: bool,
    #[arg(long)]
    pub mixture_sum: bool,
}

impl ReproduceArgs {
    fn overrides(&self) -> DesignOverrides {
        DesignOverrides { fixed_beta: self.fixed_beta, mixture_sd: self.mixture_sd, mixture_sum: self.mixture_sum }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = synth::DEFAULT_ROWS)]
    pub rows: usize,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_tag(s).ok_or_else(|| {
        let tags: Vec<&str> = Method::ALL.iter().map(|m| m.tag()).collect();
        format!("unknown method {s:?} (expected one of {})", tags.join(", "))
    })
}

/// Runs a parsed command, writing human or JSON output to `out` and
/// warnings to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => {
            let report = cmd_estimate(&a.data.spec(), a.method, &EstimateOptions {
                seed: a.seed,
                ms_starts: a.ms_starts,
                force: a.force,
            })?;
            if a.json {
                write_json(out, &report)?;
            } else {
                write_text(out, &report.render())?;
            }
            Ok(())
        }
        Command::Test(a) => {
            let report = cmd_test(&a.data.spec(), &a.beta0, &a.alpha, a.method, a.force)?;
            for w in &report.warnings {
                write_text(err, &format!("warning: {w}\n"))?;
            }
            if a.json {
                write_json(out, &report)?;
            } else {
                write_text(out, &report.render())?;
            }
            Ok(())
        }
        Command::Simulate(a) => {
            let table = cmd_simulate(&a.config, &a.out, &a.overrides())?;
            write_text(out, &table.to_markdown())?;
            if table.any_cell_fully_failed() {
                return Err(CliError::Numerical(
                    "at least one cell failed in every repetition (see NA rows)".into(),
                ));
            }
            Ok(())
        }
        Command::Reproduce(a) => {
            let (table, diff) = cmd_reproduce(a.table, a.seed, a.reps, &a.overrides())?;
            let md = table.to_markdown();
            if let Some(path) = &a.out {
                std::fs::write(path, table.to_csv()).map_err(|e| io_err(path, e))?;
                let md_path = path.with_extension("md");
                std::fs::write(&md_path, format!("{md}\n{diff}")).map_err(|e| io_err(&md_path, e))?;
            }
            write_text(out, &format!("{md}\n{diff}"))?;
            if table.any_cell_fully_failed() {
                return Err(CliError::Numerical("at least one cell failed in every repetition".into()));
            }
            Ok(())
        }
        Command::SynthFirms(a) => {
            let firms = synthetic_firms(a.rows, a.seed);
            std::fs::write(&a.out, firms.to_csv()).map_err(|e| io_err(&a.out, e))?;
            write_text(
                out,
                &format!(
                    "wrote {} rows to {} (response {}, true direction {:?})\n",
                    a.rows,
                    a.out.display(),
                    synth::RESPONSE,
                    SyntheticFirms::true_direction().iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
                ),
            )
        }
    }
}

fn write_text(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    out.write_all(s.as_bytes()).map_err(|e| CliError::Input(format!("write failed: {e}")))
}

fn write_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Input(e.to_string()))?;
    write_text(out, &format!("{s}\n"))
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub seed: u64,
    pub ms_starts: usize,
    pub force: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            seed: 0,
            ms_starts: MaxScoreConfig::default().n_random_starts,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub t: Option<f64>,
    /// |T| > 1.96
    pub significant_05: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub coefficients: Vec<Coefficient>,
    pub lambda_hat: Option<f64>,
    pub gamma_hat: f64,
    pub raw_norm: f64,
    pub score: Option<f64>,
    pub se_kind: Option<&'static str>,
    pub covariance_rank: Option<usize>,
}

impl EstimateReport {
    pub fn direction(&self) -> DVector<f64> {
        DVector::from_iterator(self.p, self.coefficients.iter().map(|c| c.estimate))
    }

    pub fn render(&self) -> String {
        let mut s = format!("method: {} ({})\nn = {}, p = {}\n\n", self.method.label(), self.method, self.n, self.p);
        let width = self.coefficients.iter().map(|c| c.name.len()).max().unwrap_or(0).max(9);
        s.push_str(&format!("{:<width$}  {:>18}  {:>9}  {}\n", "covariate", "estimate(SE)", "T", "sig@0.05"));
        for c in &self.coefficients {
            let est = match c.se {
                Some(se) => format!("{:.4}({:.4})", c.estimate, se),
                None => format!("{:.4}", c.estimate),
            };
            let t = c.t.map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
            let sig = match c.significant_05 {
                Some(true) => "*",
                Some(false) => "",
                None => "-",
            };
            s.push_str(&format!("{:<width$}  {:>18}  {:>9}  {}\n", c.name, est, t, sig));
        }
        s.push('\n');
        if let Some(l) = self.lambda_hat {
            s.push_str(&format!("lambda_hat = {l:.6}\n"));
        }
        s.push_str(&format!("gamma_hat = {:.6}\nraw_norm = {:.6}\n", self.gamma_hat, self.raw_norm));
        if let Some(score) = self.score {
            s.push_str(&format!("max score = {score}\n"));
        }
        if let Some(kind) = self.se_kind {
            s.push_str(&format!("standard errors: {kind}\n"));
        }
        s
    }
}

/// True when every column mean is within sampling noise of zero.
pub fn design_looks_centered(data: &Dataset) -> bool {
    let n = data.n() as f64;
    let mean = data.x_mean();
    (0..data.p()).all(|j| {
        let col = data.x().column(j);
        let var = col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
        let se = (var / n).sqrt();
        mean[j].abs() <= MEAN_ZERO_Z * se || mean[j] == 0.0
    })
}

fn fit(data: &Dataset, method: Method, opts: &EstimateOptions) -> Result<DirectionEstimate, CliError> {
    let ms = MaxScoreConfig {
        n_random_starts: opts.ms_starts,
        seed: opts.seed,
        ..MaxScoreConfig::default()
    };
    Ok(simulate::run_estimator(method, data, &ms)?)
}

fn ls_covariance(data: &Dataset, est: &DirectionEstimate, force: bool) -> Result<AsymptoticCovariance, CliError> {
    match est.method {
        Method::LsCentered => Ok(inference::covariance_centered(data, est)?),
        Method::LsUncentered => {
            if !force && !design_looks_centered(data) {
                return Err(CliError::Input(
                    "the uncentered covariance assumes a mean-zero design and these covariates are not centered; \
                     use --method new or pass --force"
                        .into(),
                ));
            }
            Ok(inference::covariance_uncentered(data, est)?)
        }
        other => Err(CliError::Input(format!("no asymptotic covariance for method {other}"))),
    }
}

pub fn cmd_estimate(csv: &CsvDataset, method: Method, opts: &EstimateOptions) -> Result<EstimateReport, CliError> {
    let loaded = csv.load()?;
    estimate_report(&loaded, method, opts)
}

pub fn estimate_report(loaded: &LoadedData, method: Method, opts: &EstimateOptions) -> Result<EstimateReport, CliError> {
    let data = &loaded.data;
    let est = fit(data, method, opts)?;
    let cov = if method.is_least_squares() {
        Some(ls_covariance(data, &est, opts.force)?)
    } else {
        None
    };
    let ses = cov.as_ref().map(AsymptoticCovariance::standard_errors);
    let coefficients = loaded
        .covariates
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = est.direction[j];
            let se = ses.as_ref().map(|s| s[j]);
            let t = se.filter(|s| *s > 0.0).map(|s| estimate / s);
            Coefficient {
                name: name.clone(),
                estimate,
                se,
                t,
                significant_05: t.map(|t| t.abs() > Z_CRIT_05),
            }
        })
        .collect();
    Ok(EstimateReport {
        method,
        n: data.n(),
        p: data.p(),
        coefficients,
        lambda_hat: est.lambda_hat,
        gamma_hat: est.gamma_hat,
        raw_norm: est.raw_norm,
        score: est.score,
        se_kind: cov.as_ref().map(|_| SE_LABEL),
        covariance_rank: cov.as_ref().map(|c| c.rank),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub method: Method,
    pub direction: Vec<f64>,
    pub beta0: Vec<f64>,
    #[serde(flatten)]
    pub wald: WaldResult,
    pub warnings: Vec<String>,
}

impl TestReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "Wald test of the direction ({})\nW* = {:.6}\ndof = {}\np-value = {:.6}\n",
            self.method, self.wald.statistic, self.wald.dof, self.wald.p_value
        );
        for d in &self.wald.reject_at {
            s.push_str(&format!(
                "alpha = {}: {}\n",
                d.alpha,
                if d.reject { "reject" } else { "accept" }
            ));
        }
        s
    }
}

pub fn cmd_test(csv: &CsvDataset, beta0: &[f64], alpha: &[f64], method: Method, force: bool) -> Result<TestReport, CliError> {
    let loaded = csv.load()?;
    test_report(&loaded.data, beta0, alpha, method, force)
}

pub fn test_report(data: &Dataset, beta0: &[f64], alpha: &[f64], method: Method, force: bool) -> Result<TestReport, CliError> {
    if !method.is_least_squares() {
        return Err(CliError::Input(format!("the Wald test needs --method new or new-uncentered, got {method}")));
    }
    if beta0.len() != data.p() {
        return Err(Error::InvalidNull(format!(
            "beta0 has {} entries but there are {} covariates",
            beta0.len(),
            data.p()
        ))
        .into());
    }
    let mut warnings = Vec::new();
    let mut b0 = DVector::from_column_slice(beta0);
    let norm = b0.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidNull("beta0 must be a nonzero finite vector".into()).into());
    }
    if (norm - 1.0).abs() > 1e-8 {
        warnings.push(format!("beta0 has norm {norm}; normalized to unit length"));
        b0 /= norm;
    }
    let est = fit(data, method, &EstimateOptions::default())?;
    let cov = ls_covariance(data, &est, force)?;
    let wald = inference::wald_test(&est, &cov, &b0, alpha)?;
    if let Some(w) = &wald.rank_warning {
        warnings.push(w.clone());
    }
    Ok(TestReport {
        method,
        direction: est.direction.iter().copied().collect(),
        beta0: b0.iter().copied().collect(),
        wald,
        warnings,
    })
}

/// Parses a scenario config; errors name the offending field.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenarios: Vec<Scenario> = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("config error at field '{path}': {}", e.inner()))
    })?;
    for (i, s) in scenarios.iter().enumerate() {
        s.validate().map_err(|e| CliError::Input(format!("config error in scenario [{i}]: {e}")))?;
    }
    Ok(scenarios)
}

/// Command-line switches that override the scenario design.
#[derive(Debug, Clone, Copy, Default)]
pub struct DesignOverrides {
    pub fixed_beta: bool,
    pub mixture_sd: bool,
    pub mixture_sum: bool,
}

impl DesignOverrides {
    fn apply(&self, s: &mut Scenario) {
        s.fixed_beta |= self.fixed_beta;
        s.mixture_sd |= self.mixture_sd;
        s.mixture_sum |= self.mixture_sum;
    }
}

pub fn cmd_simulate(config: &Path, out: &Path, overrides: &DesignOverrides) -> Result<SimulationTable, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| io_err(config, e))?;
    let mut scenarios = parse_config(&text)?;
    for s in &mut scenarios {
        overrides.apply(s);
    }
    let table = simulate::run_table(&scenarios)?;
    std::fs::write(out, table.to_csv()).map_err(|e| io_err(out, e))?;
    let md_path = out.with_extension("md");
    std::fs::write(&md_path, table.to_markdown()).map_err(|e| io_err(&md_path, e))?;
    Ok(table)
}

pub fn cmd_reproduce(
    table: PaperTable,
    seed: u64,
    reps: usize,
    overrides: &DesignOverrides,
) -> Result<(SimulationTable, String), CliError> {
    if reps == 0 {
        return Err(CliError::Input("--reps must be at least 1".into()));
    }
    let mut scenarios = simulate::preset(table, seed, reps);
    for s in &mut scenarios {
        overrides.apply(s);
    }
    let result = simulate::run_table(&scenarios)?;
    let diff = simulate::diff_against_reference(table, &result);
    Ok((result, diff))
}
