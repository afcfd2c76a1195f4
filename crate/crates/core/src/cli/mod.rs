//! The `sparsefit` command line: `fit`, `gof`, `scan` and `simulate`.
//!
//! Exit codes: 0 success, 2 usage error, 3 unreadable or malformed input,
//! 4 numerical failure (fit error or non-convergence).

mod scan;
mod table;

pub use scan::{run_scan, ModelSpec, ScanOptions, ScanRecord, ScanReport, SummaryRow};
pub use table::CountTable;

use crate::baselines::{BaselineParams, Family};
use crate::data::CountVector;
use crate::error::{Error, Result};
use crate::fisher::confidence_intervals;
use crate::fit::{fit_model, FitOptions, FitResult};
use crate::gof::{bootstrap_ks_with_fit, BootstrapOptions, DEFAULT_BOOTSTRAP};
use crate::rng::child_seed;
use crate::zero_models::{ZeroKind, ZeroModifiedModel};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sparsefit", version, about = "Zero-inflated and hurdle count models for sparse data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model to one feature and report estimates with Wald intervals.
    Fit(FitCmd),
    /// Bootstrap Kolmogorov-Smirnov goodness of fit for one feature.
    Gof(GofCmd),
    /// Fit and test every requested model on every feature of a table.
    Scan(ScanCmd),
    /// Write a table of counts drawn from a model.
    Simulate(SimulateCmd),
}

#[derive(Debug, Args)]
struct OptimArgs {
    /// Maximum optimizer iterations per start.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Projected-gradient tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

impl OptimArgs {
    fn options(&self) -> Result<FitOptions> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Usage("--tol must be > 0 and --max-iter >= 1".into()));
        }
        Ok(FitOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..FitOptions::default()
        })
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Input count table (CSV, features in rows).
    input: PathBuf,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, value_parser = parse_kind, default_value = "none")]
    kind: ZeroKind,
    /// Feature id to use when the table has several rows.
    #[arg(long)]
    feature: Option<String>,
}

#[derive(Debug, Args)]
struct FitCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Confidence level of the Wald intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GofCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Number of bootstrap replicates.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refit the original data in every replicate instead of a resample.
    #[arg(long)]
    no_resample: bool,
    /// Include every replicate statistic in the report.
    #[arg(long)]
    with_replicates: bool,
    /// Worker threads (0 = all available).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanCmd {
    input: PathBuf,
    /// Comma-separated model keys (poisson, nb, bb, bnb, zip, zinb, zibb,
    /// zibnb, ph, nbh, bbh, bnbh); default all twelve.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Features with p-value above this pass.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_resample: bool,
    /// Output directory for features.csv, summary.csv and report.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    optim: OptimArgs,
}

#[derive(Debug, Args)]
struct SimulateCmd {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, value_parser = parse_kind, default_value = "none")]
    kind: ZeroKind,
    /// Zero weight (ignored for --kind none).
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Baseline parameters in family order, comma-separated
    /// (poisson: lambda; nb: r,p; bb: n,alpha,beta; bnb: r,alpha,beta).
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    params: Vec<f64>,
    /// Samples per feature.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    features: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<ZeroKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Io(_) => EXIT_PARSE,
        _ => EXIT_NUMERIC,
    }
}

/// Runs the command line `args` (including the program name), writing the
/// report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{shown}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{shown}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Fit(c) => cmd_fit(&c, out),
        Command::Gof(c) => cmd_gof(&c, out),
        Command::Scan(c) => cmd_scan(&c, out),
        Command::Simulate(c) => cmd_simulate(&c, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn with_jobs<T: Send, F: FnOnce() -> T + Send>(jobs: usize, f: F) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn select_feature(table: &CountTable, feature: Option<&str>) -> Result<(String, CountVector)> {
    let index = match feature {
        Some(id) => table
            .find(id)
            .ok_or_else(|| Error::Usage(format!("feature '{id}' not found in the table")))?,
        None if table.n_features() == 1 => 0,
        None => {
            return Err(Error::Usage(format!(
                "the table has {} features; choose one with --feature",
                table.n_features()
            )))
        }
    };
    Ok((table.feature_ids[index].clone(), table.row(index)))
}

#[derive(Debug, Serialize)]
struct ParameterReport {
    name: &'static str,
    estimate: f64,
    standard_error: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    feature: String,
    family: Family,
    kind: ZeroKind,
    n: usize,
    m: usize,
    parameters: Vec<ParameterReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials_rounded: Option<u64>,
    loglik: f64,
    converged: bool,
    iterations: usize,
    grad_norm_at_solution: f64,
    case: crate::fit::CaseTag,
    starts_disagree: bool,
    level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval_note: Option<String>,
}

fn fit_report(feature: String, fit: &FitResult, level: f64) -> FitReport {
    let (cis, note) = match confidence_intervals(fit, level) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(format!("intervals suppressed: {e}"))),
    };
    let parameters = fit
        .parameter_names()
        .into_iter()
        .zip(fit.estimates())
        .enumerate()
        .map(|(i, (name, estimate))| {
            let ci = cis.as_ref().map(|c| &c[i]);
            ParameterReport {
                name,
                estimate,
                standard_error: ci.map(|c| c.standard_error),
                lower: ci.map(|c| c.lower),
                upper: ci.map(|c| c.upper),
            }
        })
        .collect();
    FitReport {
        feature,
        family: fit.family(),
        kind: fit.kind(),
        n: fit.n,
        m: fit.m,
        parameters,
        trials_rounded: fit.trials_rounded,
        loglik: fit.loglik,
        converged: fit.converged,
        iterations: fit.iterations,
        grad_norm_at_solution: fit.grad_norm_at_solution,
        case: fit.case_tag,
        starts_disagree: fit.starts_disagree,
        level,
        interval_note: note,
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn cmd_fit(c: &FitCmd, out: &mut dyn Write) -> Result<i32> {
    if !(c.level > 0.0 && c.level < 1.0) {
        return Err(Error::Usage(format!("--level must lie in (0, 1), got {}", c.level)));
    }
    let opts = c.optim.options()?;
    let table = CountTable::read_path(&c.model.input)?;
    let (feature, data) = select_feature(&table, c.model.feature.as_deref())?;
    let fit = fit_model(c.model.family, c.model.kind, &data, &opts)?;
    emit(&fit_report(feature, &fit, c.level), c.out.as_deref(), out)?;
    Ok(if fit.converged { EXIT_OK } else { EXIT_NUMERIC })
}

#[derive(Debug, Serialize)]
struct GofReport {
    feature: String,
    family: Family,
    kind: ZeroKind,
    n: usize,
    parameters: Vec<(&'static str, f64)>,
    loglik: f64,
    converged: bool,
    d_n: f64,
    p_value: f64,
    b: usize,
    seed: u64,
    fit_failures: usize,
    resample: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicate_stats: Option<Vec<f64>>,
}

fn cmd_gof(c: &GofCmd, out: &mut dyn Write) -> Result<i32> {
    if c.bootstrap == 0 {
        return Err(Error::Usage("--bootstrap must be at least 1".into()));
    }
    let opts = BootstrapOptions {
        b: c.bootstrap,
        seed: c.seed,
        resample: !c.no_resample,
        fit: c.optim.options()?,
    };
    let table = CountTable::read_path(&c.model.input)?;
    let (feature, data) = select_feature(&table, c.model.feature.as_deref())?;
    let fit = fit_model(c.model.family, c.model.kind, &data, &opts.fit)?;
    let ks = with_jobs(c.jobs, || bootstrap_ks_with_fit(&data, &fit, &opts))?;
    let report = GofReport {
        feature,
        family: fit.family(),
        kind: fit.kind(),
        n: fit.n,
        parameters: fit.parameter_names().into_iter().zip(fit.estimates()).collect(),
        loglik: fit.loglik,
        converged: fit.converged,
        d_n: ks.d_n,
        p_value: ks.p_value,
        b: ks.b,
        seed: ks.seed,
        fit_failures: ks.fit_failures,
        resample: ks.resample,
        replicate_stats: c.with_replicates.then_some(ks.replicate_stats),
    };
    emit(&report, c.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn cmd_scan(c: &ScanCmd, out: &mut dyn Write) -> Result<i32> {
    if !(c.alpha > 0.0 && c.alpha < 1.0) {
        return Err(Error::Usage(format!("--alpha must lie in (0, 1), got {}", c.alpha)));
    }
    if c.bootstrap == 0 {
        return Err(Error::Usage("--bootstrap must be at least 1".into()));
    }
    let models = match &c.models {
        None => ModelSpec::ALL.to_vec(),
        Some(keys) => keys.iter().map(|k| k.parse()).collect::<Result<Vec<ModelSpec>>>()?,
    };
    let table = CountTable::read_path(&c.input)?;
    let opts = ScanOptions {
        models,
        alpha: c.alpha,
        bootstrap: BootstrapOptions {
            b: c.bootstrap,
            seed: c.seed,
            resample: !c.no_resample,
            fit: c.optim.options()?,
        },
    };
    let report = with_jobs(c.jobs, || run_scan(&table, &opts))?;
    report.write_dir(&c.out)?;
    out.write_all(report.summary_text().as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_simulate(c: &SimulateCmd, out: &mut dyn Write) -> Result<i32> {
    let baseline = BaselineParams::from_slice(c.family, &c.params).map_err(|e| Error::Usage(e.to_string()))?;
    let model = ZeroModifiedModel::new(baseline, c.kind, c.phi).map_err(|e| Error::Usage(e.to_string()))?;
    if c.n == 0 || c.features == 0 {
        return Err(Error::Usage("--n and --features must be at least 1".into()));
    }
    let width = c.features.to_string().len();
    let feature_ids = (1..=c.features).map(|i| format!("feature_{i:0width$}")).collect();
    let sample_ids = (1..=c.n).map(|j| format!("S{j}")).collect();
    let counts = (0..c.features)
        .map(|i| model.sample(c.n, child_seed(c.seed, i as u64)).into())
        .collect();
    let table = CountTable::new(feature_ids, sample_ids, counts)?;
    match &c.out {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            table.write(std::io::BufWriter::new(file))?;
        }
        None => table.write(out)?,
    }
    Ok(EXIT_OK)
}
