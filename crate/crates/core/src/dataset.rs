//! Datasets for the selection and prediction pipeline: construction, the Friedman #1
//! generator, the UCI imports-85 loader, train/test splitting and column filtering.
//!
//! Features are stored column-major (`columns[j][i]` is feature `j` of row `i`) since
//! every dependence measure and the column filter work a column at a time.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    OrdinalEncoded,
}

/// Feature matrix plus regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
    feature_names: Vec<String>,
    column_kinds: Vec<ColumnKind>,
}

impl Dataset {
    pub fn new(
        columns: Vec<Vec<f64>>,
        target: Vec<f64>,
        feature_names: Vec<String>,
        column_kinds: Vec<ColumnKind>,
    ) -> Result<Self> {
        if target.is_empty() {
            return Err(invalid("dataset has no rows"));
        }
        if columns.is_empty() {
            return Err(invalid("dataset has no feature columns"));
        }
        if feature_names.len() != columns.len() || column_kinds.len() != columns.len() {
            return Err(invalid(format!(
                "{} columns but {} names and {} kinds",
                columns.len(),
                feature_names.len(),
                column_kinds.len()
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != target.len() {
                return Err(invalid(format!(
                    "column {} has {} rows, target has {}",
                    feature_names[j],
                    col.len(),
                    target.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(invalid(format!(
                    "non-finite value in column {} at row {i}",
                    feature_names[j]
                )));
            }
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite target at row {i}")));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(invalid(format!("duplicate feature name {name:?}")));
            }
        }
        Ok(Self {
            columns,
            target,
            feature_names,
            column_kinds,
        })
    }

    /// Numeric dataset from column vectors, with features named `x1, x2, ...`.
    pub fn from_columns(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        let m = columns.len();
        Self::new(
            columns,
            target,
            (1..=m).map(|j| format!("x{j}")).collect(),
            vec![ColumnKind::Numeric; m],
        )
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows()) {
            return Err(invalid(format!("row index {bad} out of range")));
        }
        Self::new(
            self.columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            rows.iter().map(|&r| self.target[r]).collect(),
            self.feature_names.clone(),
            self.column_kinds.clone(),
        )
    }
}

/// Selection over the M feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &i in indices {
            if i >= len {
                return Err(invalid(format!(
                    "index {i} out of range for mask of length {len}"
                )));
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    pub fn full(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn empty(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of selected features.
    pub fn k(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Friedman #1 regression data: uniform features on [0, 1], the first five carry
/// the signal `10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5`, plus Gaussian noise.
pub fn generate_friedman1(
    n_samples: usize,
    n_features: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_features < 5 {
        return Err(invalid(format!(
            "friedman #1 needs at least 5 features, got {n_features}"
        )));
    }
    if n_samples == 0 {
        return Err(invalid("n_samples must be positive"));
    }
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| invalid(format!("noise_sigma {noise_sigma}: {e}")))?;
    let mut rng = rng::stream(seed, 0);
    let mut columns = vec![Vec::with_capacity(n_samples); n_features];
    let mut target = Vec::with_capacity(n_samples);
    let mut row = vec![0.0; n_features];
    for _ in 0..n_samples {
        for (v, col) in row.iter_mut().zip(columns.iter_mut()) {
            *v = rng.random::<f64>();
            col.push(*v);
        }
        let eps = if noise_sigma > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        target.push(friedman1_signal(&row) + eps);
    }
    Dataset::from_columns(columns, target)
}

fn friedman1_signal(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// How missing (`?`) entries in the Automobile file are handled. Rows with a missing
/// price are dropped under either policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Numeric gaps take the column median; in categorical columns `?` is a category.
    #[default]
    DropRowIfTargetMissingImputeRest,
    DropAnyMissing,
}

pub const AUTO_COLUMNS: [&str; 26] = [
    "symboling",
    "normalized-losses",
    "make",
    "fuel-type",
    "aspiration",
    "num-of-doors",
    "body-style",
    "drive-wheels",
    "engine-location",
    "wheel-base",
    "length",
    "width",
    "height",
    "curb-weight",
    "engine-type",
    "num-of-cylinders",
    "engine-size",
    "fuel-system",
    "bore",
    "stroke",
    "compression-ratio",
    "horsepower",
    "peak-rpm",
    "city-mpg",
    "highway-mpg",
    "price",
];

const MISSING: &str = "?";

/// Loads the UCI imports-85 file (26 fields, no header, `?` for missing, price last).
pub fn load_auto_csv(path: &Path, policy: MissingPolicy) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_auto(&text, policy)
}

/// Same as [`load_auto_csv`] but from file contents already in memory.
pub fn parse_auto(text: &str, policy: MissingPolicy) -> Result<Dataset> {
    let n_fields = AUTO_COLUMNS.len();
    let mut rows: Vec<Vec<String>> = Vec::new();
    // One record per physical line, so errors can name the line.
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(raw.as_bytes());
        let record = match reader.records().next() {
            Some(r) => r.map_err(|e| Error::Load {
                row: Some(line),
                column: None,
                message: e.to_string(),
            })?,
            None => continue,
        };
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != n_fields {
            return Err(Error::Load {
                row: Some(line),
                column: None,
                message: format!("expected {n_fields} fields, found {}", record.len()),
            });
        }
        let price = &record[n_fields - 1];
        if price == MISSING {
            continue;
        }
        if price.parse::<f64>().map_or(true, |p| !p.is_finite()) {
            return Err(Error::Load {
                row: Some(line),
                column: Some(n_fields),
                message: format!("price {price:?} is not a number"),
            });
        }
        if policy == MissingPolicy::DropAnyMissing && record.iter().any(|f| f == MISSING) {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(Error::Load {
            row: None,
            column: None,
            message: "no rows survive missing-value handling".into(),
        });
    }

    let target: Vec<f64> = rows
        .iter()
        .map(|r| r[n_fields - 1].parse().expect("validated above"))
        .collect();
    let mut columns = Vec::with_capacity(n_fields - 1);
    let mut kinds = Vec::with_capacity(n_fields - 1);
    for j in 0..n_fields - 1 {
        let raw: Vec<&str> = rows.iter().map(|r| r[j].as_str()).collect();
        let (col, kind) = encode_auto_column(&raw);
        columns.push(col);
        kinds.push(kind);
    }
    let names = AUTO_COLUMNS[..n_fields - 1]
        .iter()
        .map(|s| s.to_string())
        .collect();
    Dataset::new(columns, target, names, kinds)
}

/// A column is numeric when every present value parses; otherwise it is ordinal-encoded.
fn encode_auto_column(raw: &[&str]) -> (Vec<f64>, ColumnKind) {
    let parsed: Vec<Option<f64>> = raw
        .iter()
        .map(|s| {
            if *s == MISSING {
                None
            } else {
                s.parse::<f64>().ok().filter(|v| v.is_finite())
            }
        })
        .collect();
    let numeric = raw
        .iter()
        .zip(&parsed)
        .all(|(s, p)| *s == MISSING || p.is_some())
        && parsed.iter().any(Option::is_some);
    if !numeric {
        return (ordinal_encode(raw), ColumnKind::OrdinalEncoded);
    }
    let mut present: Vec<f64> = parsed.iter().flatten().copied().collect();
    present.sort_by(f64::total_cmp);
    let n = present.len();
    let median = if n % 2 == 1 {
        present[n / 2]
    } else {
        0.5 * (present[n / 2 - 1] + present[n / 2])
    };
    (
        parsed.iter().map(|p| p.unwrap_or(median)).collect(),
        ColumnKind::Numeric,
    )
}

/// Maps labels to 0, 1, 2, ... in order of first appearance.
pub fn ordinal_encode<S: AsRef<str>>(values: &[S]) -> Vec<f64> {
    let mut codes: HashMap<&str, usize> = HashMap::new();
    values
        .iter()
        .map(|v| {
            let next = codes.len();
            *codes.entry(v.as_ref()).or_insert(next) as f64
        })
        .collect()
}

/// Repeated random train/test partitions (Monte Carlo cross-validation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub n_repeats: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            n_repeats: 3,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.n_repeats == 0 {
            return Err(invalid("n_repeats must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub repeat: usize,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn split(dataset: &Dataset, plan: &SplitPlan) -> Result<Vec<Split>> {
    plan.validate()?;
    let n = dataset.n_rows();
    let n_train = (plan.train_fraction * n as f64).floor() as usize;
    if n_train < 1 || n_train >= n {
        return Err(invalid(format!(
            "cannot split {n} rows with train fraction {}",
            plan.train_fraction
        )));
    }
    (0..plan.n_repeats)
        .map(|repeat| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(plan.seed, repeat as u64));
            let test_rows = order.split_off(n_train);
            let train_rows = order;
            Ok(Split {
                repeat,
                train: dataset.select_rows(&train_rows)?,
                test: dataset.select_rows(&test_rows)?,
                train_rows,
                test_rows,
            })
        })
        .collect()
}

/// Keeps the columns whose mask bit is set, in their original order.
pub fn filter_columns(dataset: &Dataset, mask: &FeatureMask) -> Result<Dataset> {
    if mask.len() != dataset.n_features() {
        return Err(invalid(format!(
            "mask length {} does not match {} features",
            mask.len(),
            dataset.n_features()
        )));
    }
    if mask.k() == 0 {
        return Err(invalid("mask selects no features"));
    }
    let keep = mask.indices();
    Dataset::new(
        keep.iter().map(|&j| dataset.columns[j].clone()).collect(),
        dataset.target.clone(),
        keep.iter()
            .map(|&j| dataset.feature_names[j].clone())
            .collect(),
        keep.iter().map(|&j| dataset.column_kinds[j]).collect(),
    )
}
