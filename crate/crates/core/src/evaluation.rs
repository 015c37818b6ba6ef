//! Benchmark protocol: repeated train/test splits, every configured selector on the
//! training rows, every configured model on the selected columns, test MAE and subset
//! accuracy aggregated per method.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    filter_columns, generate_friedman1, load_auto_csv, split, Dataset, MissingPolicy, SplitPlan,
};
use crate::error::{invalid, Error, Result};
use crate::metrics::MetricKind;
use crate::models::{mae, GbrParams, ModelKind, TrainedModel};
use crate::rng::derive_seed;
use crate::samplers::SamplerConfig;
use crate::selection::{
    all_features, greedy_ranked_select, qafs_select, rfe_select, SelectionResult, SelectorKind,
};

/// `(hit + length) / 2` with `hit = |S ∩ O| / |O|` and
/// `length = max(0, 1 - ||S| - |O|| / |O|)`. Duplicate indices are ignored.
pub fn subset_accuracy(selected: &[usize], optimal: &[usize]) -> Result<f64> {
    let optimal: BTreeSet<usize> = optimal.iter().copied().collect();
    if optimal.is_empty() {
        return Err(invalid("optimal feature set must not be empty"));
    }
    let selected: BTreeSet<usize> = selected.iter().copied().collect();
    let o = optimal.len() as f64;
    let hit = selected.intersection(&optimal).count() as f64 / o;
    let length = (1.0 - (selected.len() as f64 - o).abs() / o).max(0.0);
    Ok((hit + length) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FriedmanSource {
    pub samples: usize,
    pub features: usize,
    pub noise: f64,
}

impl Default for FriedmanSource {
    fn default() -> Self {
        Self {
            samples: 100,
            features: 50,
            noise: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoSource {
    pub path: PathBuf,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Friedman(FriedmanSource),
    Auto(AutoSource),
}

impl Default for DataSource {
    fn default() -> Self {
        Self::Friedman(FriedmanSource::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuboSettings {
    pub alpha: f64,
    pub lambda: f64,
    pub k: usize,
}

impl Default for QuboSettings {
    fn default() -> Self {
        Self {
            alpha: 1000.0,
            lambda: 10.0,
            k: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Md,
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Md => "md",
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(Self::Md),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid(format!(
                "unknown output format {other:?} (expected md, csv or json)"
            ))),
        }
    }
}

/// Full description of one benchmark run. Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub metrics: Vec<MetricKind>,
    pub models: Vec<ModelKind>,
    pub selectors: Vec<SelectorKind>,
    pub qubo: QuboSettings,
    pub sampler: SamplerConfig,
    pub train_fraction: f64,
    pub repeats: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub output: OutputFormat,
    pub out: Option<PathBuf>,
    pub greedy_fraction: f64,
    /// Defaults to `floor(M / 2)`.
    pub rfe_target_k: Option<usize>,
    pub gbr: GbrParams,
    /// Include timing columns in rendered reports. Off by default so that reports are
    /// reproducible byte for byte.
    pub report_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            metrics: vec![MetricKind::Pcc],
            models: vec![ModelKind::Lr],
            selectors: vec![SelectorKind::Qubo, SelectorKind::All],
            qubo: QuboSettings::default(),
            sampler: SamplerConfig::default(),
            train_fraction: 0.7,
            repeats: 3,
            bootstrap: 10,
            seed: 0,
            output: OutputFormat::Md,
            out: None,
            greedy_fraction: 0.5,
            rfe_target_k: None,
            gbr: GbrParams::default(),
            report_timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.metrics.is_empty() && self.selectors.contains(&SelectorKind::Qubo) {
            return cfg("the qubo selector needs at least one metric".into());
        }
        if self.models.is_empty() {
            return cfg("at least one model is required".into());
        }
        if self.selectors.is_empty() {
            return cfg("at least one selector is required".into());
        }
        for m in &self.metrics {
            m.validate().map_err(to_config)?;
        }
        let q = self.qubo;
        if !(q.alpha > 0.0 && q.alpha.is_finite()) {
            return cfg(format!("alpha must be positive, got {}", q.alpha));
        }
        if !(q.lambda >= 0.0 && q.lambda.is_finite()) {
            return cfg(format!("lambda must be non-negative, got {}", q.lambda));
        }
        if q.k == 0 {
            return cfg("k must be at least 1".into());
        }
        self.sampler.validate().map_err(to_config)?;
        self.split_plan().validate().map_err(to_config)?;
        if self.bootstrap == 0 {
            return cfg("bootstrap must be at least 1".into());
        }
        if !(self.greedy_fraction > 0.0 && self.greedy_fraction <= 1.0) {
            return cfg(format!(
                "greedy_fraction must lie in (0, 1], got {}",
                self.greedy_fraction
            ));
        }
        if self.rfe_target_k == Some(0) {
            return cfg("rfe_target_k must be at least 1".into());
        }
        self.gbr.validate().map_err(to_config)?;
        match &self.data {
            DataSource::Friedman(f) => {
                if f.features < 5 {
                    return cfg(format!(
                        "friedman data needs at least 5 features, got {}",
                        f.features
                    ));
                }
                if f.samples < 2 {
                    return cfg(format!(
                        "friedman data needs at least 2 samples, got {}",
                        f.samples
                    ));
                }
                if !(f.noise >= 0.0 && f.noise.is_finite()) {
                    return cfg(format!("noise must be non-negative, got {}", f.noise));
                }
                if q.k > f.features {
                    return cfg(format!("k = {} exceeds {} features", q.k, f.features));
                }
            }
            DataSource::Auto(a) => {
                if a.path.as_os_str().is_empty() {
                    return cfg("auto data needs a path (--data)".into());
                }
            }
        }
        Ok(())
    }

    /// The split seed is derived from the master seed.
    pub fn split_plan(&self) -> SplitPlan {
        SplitPlan {
            train_fraction: self.train_fraction,
            n_repeats: self.repeats,
            seed: derive_seed(self.seed, SPLIT_STREAM),
        }
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

const SPLIT_STREAM: u64 = 1;
const SELECTION_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    /// Selected columns as a bit string.
    pub mask: String,
    pub k: usize,
    pub mae: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select_time_us: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_us: Option<u64>,
    pub test_rows: Vec<usize>,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub selector: SelectorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    pub model: ModelKind,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub k_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select_time_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_us: Option<f64>,
    pub repeats: Vec<RepeatRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRow {
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub n_rows: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    /// Columns treated as the true support for subset accuracy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_features: Option<Vec<usize>>,
    pub include_timings: bool,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<FailedRow>,
}

impl ExperimentReport {
    pub fn empty() -> Self {
        Self {
            dataset: String::new(),
            n_rows: 0,
            n_features: 0,
            feature_names: Vec::new(),
            optimal_features: None,
            include_timings: false,
            rows: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Loads or generates the configured data. Also returns a short description and the
/// known true support, if any.
pub fn load_data(source: &DataSource, seed: u64) -> Result<(Dataset, String, Option<Vec<usize>>)> {
    match source {
        DataSource::Friedman(f) => {
            let d = generate_friedman1(f.samples, f.features, f.noise, seed)?;
            let desc = format!(
                "friedman1 n={} m={} noise={}",
                f.samples, f.features, f.noise
            );
            Ok((d, desc, Some((0..5).collect())))
        }
        DataSource::Auto(a) => {
            let d = load_auto_csv(&a.path, a.missing_policy)?;
            Ok((d, format!("auto {}", a.path.display()), None))
        }
    }
}

/// One planned row: which selector (and metric) feeds which model.
struct Plan {
    label: String,
    selector: SelectorKind,
    metric: Option<usize>,
    metric_label: Option<String>,
    model: ModelKind,
}

fn plan_rows(config: &ExperimentConfig) -> Vec<Plan> {
    let mut plans = Vec::new();
    for &selector in &config.selectors {
        let metrics: Vec<Option<usize>> = if selector == SelectorKind::Qubo {
            (0..config.metrics.len()).map(Some).collect()
        } else {
            vec![None]
        };
        for metric in metrics {
            for &model in &config.models {
                let prefix = match (selector, metric) {
                    (SelectorKind::Qubo, Some(i)) => format!("Q{}", config.metrics[i].label()),
                    (SelectorKind::Greedy, _) => "GR".into(),
                    (SelectorKind::Rfe, _) => "RFE".into(),
                    _ => "All".into(),
                };
                plans.push(Plan {
                    label: format!("{prefix}-{}", model.label()),
                    selector,
                    metric,
                    metric_label: metric.map(|i| config.metrics[i].label().to_string()),
                    model,
                });
            }
        }
    }
    plans
}

/// Selections are cached per repeat, so every model sees the same mask from a given
/// selector. RFE depends on the model and is keyed by it as well.
type SelectionKey = (usize, SelectorKind, Option<usize>, Option<ModelKind>);

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let (data, desc, optimal) = load_data(&config.data, config.seed)?;
    let m = data.n_features();
    if config.selectors.contains(&SelectorKind::Qubo) && config.qubo.k > m {
        return Err(Error::Config(format!(
            "k = {} exceeds {m} features",
            config.qubo.k
        )));
    }
    let splits = split(&data, &config.split_plan())?;
    let rfe_k = config.rfe_target_k.unwrap_or((m / 2).max(1));

    let mut cache: BTreeMap<SelectionKey, std::result::Result<(SelectionResult, u64), String>> =
        BTreeMap::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();

    for plan in plan_rows(config) {
        let mut records = Vec::with_capacity(splits.len());
        let mut failure = None;
        for s in &splits {
            let rfe_model = (plan.selector == SelectorKind::Rfe).then_some(plan.model);
            let key = (s.repeat, plan.selector, plan.metric, rfe_model);
            let selected = cache
                .entry(key)
                .or_insert_with(|| {
                    let start = Instant::now();
                    let seed = derive_seed(
                        derive_seed(config.seed, SELECTION_STREAM + s.repeat as u64),
                        plan.metric.map_or(0, |i| i as u64 + 1),
                    );
                    run_selector(
                        config,
                        &s.train,
                        plan.selector,
                        plan.metric,
                        plan.model,
                        rfe_k,
                        seed,
                    )
                    .map(|r| (r, start.elapsed().as_micros() as u64))
                    .map_err(|e| e.to_string())
                })
                .clone();
            let outcome = selected
                .map_err(|e| format!("repeat {}: selection failed: {e}", s.repeat))
                .and_then(|(sel, select_wall)| {
                    evaluate(config, s, &sel, plan.model, select_wall, optimal.as_deref())
                        .map_err(|e| format!("repeat {}: {e}", s.repeat))
                });
            match outcome {
                Ok(r) => records.push(r),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        match failure {
            Some(error) => failures.push(FailedRow {
                label: plan.label,
                error,
            }),
            None => rows.push(aggregate(&plan, records, config.report_timings)),
        }
    }

    Ok(ExperimentReport {
        dataset: desc,
        n_rows: data.n_rows(),
        n_features: m,
        feature_names: data.feature_names().to_vec(),
        optimal_features: optimal,
        include_timings: config.report_timings,
        rows,
        failures,
    })
}

fn run_selector(
    config: &ExperimentConfig,
    train: &Dataset,
    selector: SelectorKind,
    metric: Option<usize>,
    model: ModelKind,
    rfe_k: usize,
    seed: u64,
) -> Result<SelectionResult> {
    match selector {
        SelectorKind::Qubo => {
            let metric = &config.metrics[metric.expect("qubo rows carry a metric")];
            let q = config.qubo;
            qafs_select(
                train,
                metric,
                q.alpha,
                q.lambda,
                q.k,
                &config.sampler,
                config.bootstrap,
                seed,
            )
        }
        SelectorKind::Greedy => greedy_ranked_select(train, config.greedy_fraction),
        SelectorKind::Rfe => rfe_select(train, model, rfe_k.min(train.n_features()), &config.gbr),
        SelectorKind::All => Ok(all_features(train)),
    }
}

fn evaluate(
    config: &ExperimentConfig,
    s: &crate::dataset::Split,
    sel: &SelectionResult,
    model: ModelKind,
    select_wall_us: u64,
    optimal: Option<&[usize]>,
) -> Result<RepeatRecord> {
    let start = Instant::now();
    let train = filter_columns(&s.train, &sel.mask)?;
    let test = filter_columns(&s.test, &sel.mask)?;
    let fitted = TrainedModel::fit(model, train.columns(), train.target(), &config.gbr)?;
    let predictions = fitted.predict(test.columns())?;
    let err = mae(&predictions, test.target())?;
    let indices = sel.mask.indices();
    let sa = optimal.map(|o| subset_accuracy(&indices, o)).transpose()?;
    let fit_us = start.elapsed().as_micros() as u64;
    Ok(RepeatRecord {
        repeat: s.repeat,
        mask: sel.mask.to_string(),
        k: sel.mask.k(),
        mae: err,
        subset_accuracy: sa,
        select_time_us: Some(sel.select_time_us),
        wall_time_us: Some(select_wall_us + fit_us),
        test_rows: s.test_rows.clone(),
        predictions,
        targets: test.target().to_vec(),
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n.max(1) as f64
}

fn aggregate(plan: &Plan, mut records: Vec<RepeatRecord>, timings: bool) -> ReportRow {
    let n = records.len();
    let mae_mean = mean(records.iter().map(|r| r.mae));
    let mae_std = if n > 1 {
        (records
            .iter()
            .map(|r| (r.mae - mae_mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let subset_accuracy = if records.iter().all(|r| r.subset_accuracy.is_some()) && n > 0 {
        Some(mean(records.iter().filter_map(|r| r.subset_accuracy)))
    } else {
        None
    };
    let (select_time_us, wall_time_us) = if timings {
        (
            Some(mean(
                records
                    .iter()
                    .filter_map(|r| r.select_time_us)
                    .map(|t| t as f64),
            )),
            Some(mean(
                records
                    .iter()
                    .filter_map(|r| r.wall_time_us)
                    .map(|t| t as f64),
            )),
        )
    } else {
        for r in &mut records {
            r.select_time_us = None;
            r.wall_time_us = None;
        }
        (None, None)
    };
    ReportRow {
        label: plan.label.clone(),
        selector: plan.selector,
        metric: plan.metric_label.clone(),
        model: plan.model,
        mae_mean,
        mae_std,
        k_mean: mean(records.iter().map(|r| r.k as f64)),
        subset_accuracy,
        select_time_us,
        wall_time_us,
        repeats: records,
    }
}

pub fn render_report(report: &ExperimentReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Md => render_markdown(report),
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn render_markdown(report: &ExperimentReport) -> String {
    let mut out = String::new();
    if report.include_timings {
        out.push_str("| FS method | MAE | k | SA | Select time (us) | Wall time (us) |\n");
        out.push_str("|---|---|---|---|---|---|\n");
    } else {
        out.push_str("| FS method | MAE | k | SA |\n|---|---|---|---|\n");
    }
    for r in &report.rows {
        out.push_str(&format!(
            "| {} | {:.2} ± {:.2} | {:.1} | {} |",
            r.label,
            r.mae_mean,
            r.mae_std,
            r.k_mean,
            fmt_opt(r.subset_accuracy, 2)
        ));
        if report.include_timings {
            out.push_str(&format!(
                " {} | {} |",
                fmt_opt(r.select_time_us, 0),
                fmt_opt(r.wall_time_us, 0)
            ));
        }
        out.push('\n');
    }
    if !report.failures.is_empty() {
        out.push('\n');
        for f in &report.failures {
            out.push_str(&format!("- {} failed: {}\n", f.label, f.error));
        }
    }
    out
}

fn render_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method", "mae_mean", "mae_std", "k_mean", "subset_accuracy"];
    if report.include_timings {
        header.extend(["select_time_us", "wall_time_us"]);
    }
    header.push("error");
    w.write_record(&header).expect("in-memory write");
    for r in &report.rows {
        let mut rec = vec![
            r.label.clone(),
            format!("{:.2}", r.mae_mean),
            format!("{:.2}", r.mae_std),
            format!("{:.1}", r.k_mean),
            r.subset_accuracy
                .map_or(String::new(), |v| format!("{v:.2}")),
        ];
        if report.include_timings {
            rec.push(
                r.select_time_us
                    .map_or(String::new(), |v| format!("{v:.0}")),
            );
            rec.push(r.wall_time_us.map_or(String::new(), |v| format!("{v:.0}")));
        }
        rec.push(String::new());
        w.write_record(&rec).expect("in-memory write");
    }
    for f in &report.failures {
        let mut rec = vec![f.label.clone(); 1];
        rec.extend(std::iter::repeat_n(String::new(), header.len() - 2));
        rec.push(f.error.clone());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
