//! Command-line front end: `qafs bench friedman|auto ...` and `qafs solve ...`.
//!
//! Settings resolve as defaults, then an optional `--config` JSON file (same field
//! names as [`ExperimentConfig`]), then explicit flags.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::MissingPolicy;
use crate::error::Error;
use crate::evaluation::{
    render_report, run_experiment, AutoSource, DataSource, ExperimentConfig, FriedmanSource,
    OutputFormat,
};
use crate::metrics::MetricKind;
use crate::models::ModelKind;
use crate::qubo::{QuboMatrix, QuboProblem};
use crate::samplers::remote::WireRequest;
use crate::samplers::{best_mask, SamplerConfig, SamplerKind};
use crate::selection::SelectorKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qafs",
    version,
    about = "QUBO-based feature selection benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the selection and regression benchmark.
    Bench {
        #[command(subcommand)]
        data: BenchData,
    },
    /// Solve a standalone QUBO given in the wire-protocol request shape.
    #[command(version)]
    Solve(SolveArgs),
}

#[derive(Debug, Subcommand)]
enum BenchData {
    /// Synthetic Friedman #1 data.
    #[command(version)]
    Friedman {
        /// Number of rows.
        #[arg(long)]
        samples: Option<usize>,
        /// Number of feature columns (the first five carry signal).
        #[arg(long)]
        features: Option<usize>,
        /// Standard deviation of the additive Gaussian noise.
        #[arg(long, allow_negative_numbers = true)]
        noise: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// The UCI Automobile (imports-85) file.
    #[command(version)]
    Auto {
        /// Path to imports-85.data.
        #[arg(long)]
        data: Option<PathBuf>,
        /// How `?` entries are handled.
        #[arg(long, value_parser = parse_policy)]
        missing_policy: Option<MissingPolicy>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated dependence metrics: pcc, mi, mic, gmic.
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    metric: Option<Vec<MetricKind>>,
    /// Comma-separated regressors: lr, gbr.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    model: Option<Vec<ModelKind>>,
    /// Comma-separated selectors: qubo, greedy, rfe, all.
    #[arg(long, value_delimiter = ',', value_parser = parse_selector)]
    selector: Option<Vec<SelectorKind>>,
    /// Weight of the relevance/redundancy objective.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Weight of the cardinality penalty.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Target number of selected features for the QUBO selector.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Sampler runs per QUBO selection.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Number of random train/test splits.
    #[arg(long)]
    repeats: Option<usize>,
    /// Fraction of rows used for training.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report format: md, csv or json.
    #[arg(long, value_parser = parse_output)]
    output: Option<OutputFormat>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fraction of MIC-ranked features kept by the greedy selector.
    #[arg(long)]
    greedy_fraction: Option<f64>,
    /// Features kept by recursive elimination (default: half of the columns).
    #[arg(long)]
    rfe_k: Option<usize>,
    /// Boosting stages.
    #[arg(long)]
    gbr_trees: Option<usize>,
    /// Depth of each boosted tree.
    #[arg(long)]
    gbr_depth: Option<usize>,
    /// Boosting learning rate.
    #[arg(long)]
    gbr_learning_rate: Option<f64>,
    /// Minimum rows per tree leaf.
    #[arg(long)]
    gbr_min_leaf: Option<usize>,
    /// Include timing columns in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct SamplerArgs {
    /// Sampler: sa, exhaustive or remote.
    #[arg(long, value_parser = parse_sampler)]
    sampler: Option<SamplerKind>,
    /// Reads per sampler run.
    #[arg(long)]
    shots: Option<usize>,
    /// Annealing sweeps per read.
    #[arg(long)]
    sweeps: Option<usize>,
    /// URL of the remote sampling service.
    #[arg(long)]
    endpoint: Option<String>,
    /// Remote request timeout in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Fall back to simulated annealing when the remote sampler fails.
    #[arg(long)]
    fallback_to_sa: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// QUBO file: {"linear": {...}, "quadratic": {"i,j": ...}, "offset": c}.
    #[arg(long)]
    qubo: PathBuf,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Seed for simulated annealing.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_selector(s: &str) -> Result<SelectorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_sampler(s: &str) -> Result<SamplerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_output(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_policy(s: &str) -> Result<MissingPolicy, String> {
    match s {
        "impute" | "drop_row_if_target_missing_impute_rest" => {
            Ok(MissingPolicy::DropRowIfTargetMissingImputeRest)
        }
        "drop" | "drop_any_missing" => Ok(MissingPolicy::DropAnyMissing),
        other => Err(format!(
            "unknown missing policy {other:?} (expected impute or drop)"
        )),
    }
}

/// What a parsed command line asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum CliInvocation {
    Bench(ExperimentConfig),
    Solve {
        qubo: PathBuf,
        sampler: SamplerConfig,
        seed: u64,
    },
    /// `--help` or `--version`: print and exit successfully.
    Info(String),
}

/// A failure with its exit code and a human-readable message.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::TooLarge { .. } => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub fn parse_and_validate<I, S>(argv: I) -> Result<CliInvocation, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(CliInvocation::Info(e.render().to_string()))
                }
                _ => Err(CliError::config(e.render().to_string())),
            };
        }
    };
    match cli.command {
        Command::Bench { data } => {
            let config = resolve_bench(data)?;
            config
                .validate()
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok(CliInvocation::Bench(config))
        }
        Command::Solve(args) => {
            let mut sampler = SamplerConfig::default();
            apply_sampler(&mut sampler, &args.sampler);
            sampler
                .validate()
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok(CliInvocation::Solve {
                qubo: args.qubo,
                sampler,
                seed: args.seed.unwrap_or(0),
            })
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
}

fn resolve_bench(data: BenchData) -> Result<ExperimentConfig, CliError> {
    let common = match &data {
        BenchData::Friedman { common, .. } | BenchData::Auto { common, .. } => common,
    };
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    match &data {
        BenchData::Friedman {
            samples,
            features,
            noise,
            ..
        } => {
            let mut f = match config.data {
                DataSource::Friedman(f) => f,
                DataSource::Auto(_) => FriedmanSource::default(),
            };
            set(&mut f.samples, samples);
            set(&mut f.features, features);
            set(&mut f.noise, noise);
            config.data = DataSource::Friedman(f);
        }
        BenchData::Auto {
            data,
            missing_policy,
            ..
        } => {
            let mut a = match config.data {
                DataSource::Auto(a) => a,
                DataSource::Friedman(_) => AutoSource {
                    path: PathBuf::new(),
                    missing_policy: MissingPolicy::default(),
                },
            };
            set(&mut a.path, data);
            set(&mut a.missing_policy, missing_policy);
            if a.path.as_os_str().is_empty() {
                return Err(CliError::config("bench auto needs --data PATH"));
            }
            config.data = DataSource::Auto(a);
        }
    }
    set(&mut config.metrics, &common.metric);
    set(&mut config.models, &common.model);
    set(&mut config.selectors, &common.selector);
    set(&mut config.qubo.alpha, &common.alpha);
    set(&mut config.qubo.lambda, &common.lambda);
    set(&mut config.qubo.k, &common.k);
    apply_sampler(&mut config.sampler, &common.sampler);
    set(&mut config.bootstrap, &common.bootstrap);
    set(&mut config.repeats, &common.repeats);
    set(&mut config.train_fraction, &common.train_fraction);
    set(&mut config.seed, &common.seed);
    set(&mut config.output, &common.output);
    if common.out.is_some() {
        config.out = common.out.clone();
    }
    set(&mut config.greedy_fraction, &common.greedy_fraction);
    if common.rfe_k.is_some() {
        config.rfe_target_k = common.rfe_k;
    }
    set(&mut config.gbr.n_trees, &common.gbr_trees);
    set(&mut config.gbr.max_depth, &common.gbr_depth);
    set(&mut config.gbr.learning_rate, &common.gbr_learning_rate);
    set(&mut config.gbr.min_samples_leaf, &common.gbr_min_leaf);
    if common.timings {
        config.report_timings = true;
    }
    Ok(config)
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn apply_sampler(cfg: &mut SamplerConfig, args: &SamplerArgs) {
    set(&mut cfg.kind, &args.sampler);
    set(&mut cfg.shots, &args.shots);
    set(&mut cfg.schedule.sweeps, &args.sweeps);
    if args.endpoint.is_some() {
        cfg.endpoint = args.endpoint.clone();
    }
    set(&mut cfg.timeout_ms, &args.timeout_ms);
    if args.fallback_to_sa {
        cfg.fallback_to_sa = true;
    }
}

/// Parses `argv` (program name first), runs the command, and returns the exit code.
pub fn main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`main`] with explicit output streams.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let result = parse_and_validate(argv).and_then(|inv| execute(inv, out));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message.trim_end());
            e.code
        }
    }
}

fn execute(invocation: CliInvocation, out: &mut dyn Write) -> Result<i32, CliError> {
    match invocation {
        CliInvocation::Info(text) => {
            write_all(out, &text)?;
            Ok(EXIT_OK)
        }
        CliInvocation::Bench(config) => {
            let report = run_experiment(&config)?;
            let text = render_report(&report, config.output);
            match &config.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| CliError {
                    code: EXIT_DATA,
                    message: format!("cannot write {}: {e}", path.display()),
                })?,
                None => write_all(out, &text)?,
            }
            if report.rows.is_empty() && !report.failures.is_empty() {
                return Err(CliError {
                    code: EXIT_ALL_FAILED,
                    message: format!(
                        "all {} rows failed; first error: {}",
                        report.failures.len(),
                        report.failures[0].error
                    ),
                });
            }
            Ok(EXIT_OK)
        }
        CliInvocation::Solve {
            qubo,
            sampler,
            seed,
        } => {
            let text = std::fs::read_to_string(&qubo).map_err(|e| CliError {
                code: EXIT_DATA,
                message: format!("cannot read {}: {e}", qubo.display()),
            })?;
            let request: WireRequest = serde_json::from_str(&text).map_err(|e| CliError {
                code: EXIT_DATA,
                message: format!("invalid QUBO file {}: {e}", qubo.display()),
            })?;
            let expanded = request.to_expanded().map_err(|e| CliError {
                code: EXIT_DATA,
                message: e.to_string(),
            })?;
            let report = solve(expanded.matrix, expanded.offset, &sampler, seed)?;
            write_all(out, &report)?;
            Ok(EXIT_OK)
        }
    }
}

/// Solves `w' Q w + offset` directly (no cardinality penalty).
fn solve(
    q: QuboMatrix,
    offset: f64,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<String, CliError> {
    let problem = QuboProblem::new(q, 1.0, 0.0, 1)?;
    let set = sampler.run(&problem, seed)?;
    let mask = best_mask(&set)?;
    let energy = crate::qubo::energy(&problem, &mask)? + offset;
    Ok(format!(
        "mask: {mask}\nk: {}\nenergy: {energy}\nshots: {}\nsolve_time_us: {}\nwall_time_us: {}\n",
        mask.k(),
        set.shots,
        set.solve_time_us,
        set.wall_time_us
    ))
}

fn write_all(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("cannot write output: {e}"),
    })
}
