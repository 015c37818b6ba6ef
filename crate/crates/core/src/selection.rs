//! Feature selectors: the QUBO pipeline plus the all-features, greedy-ranked and
//! recursive-elimination baselines. Every selector sees the training split only.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{Dataset, FeatureMask};
use crate::error::{invalid, Error, Result};
use crate::metrics::{mic, MetricKind, DEFAULT_GRID_EXPONENT};
use crate::models::{column_std, importance, GbrParams, ModelKind, TrainedModel};
use crate::qubo::{build_q, QuboProblem};
use crate::rng::derive_seed;
use crate::samplers::{best_mask, SampleSet, SamplerConfig, SamplerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub mask: FeatureMask,
    pub method_label: String,
    pub select_time_us: u64,
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    Qubo,
    Greedy,
    Rfe,
    All,
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Qubo => "qubo",
            Self::Greedy => "greedy",
            Self::Rfe => "rfe",
            Self::All => "all",
        })
    }
}

impl FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qubo" | "qafs" => Ok(Self::Qubo),
            "greedy" | "gr" => Ok(Self::Greedy),
            "rfe" => Ok(Self::Rfe),
            "all" => Ok(Self::All),
            other => Err(invalid(format!(
                "unknown selector {other:?} (expected qubo, greedy, rfe or all)"
            ))),
        }
    }
}

/// Builds `Q` from the training split, samples it `bootstrap` times with seeds derived
/// from `seed`, and keeps the best mask over the union of all reads.
#[allow(clippy::too_many_arguments)]
pub fn qafs_select(
    train: &Dataset,
    metric: &MetricKind,
    alpha: f64,
    lambda: f64,
    k: usize,
    sampler: &SamplerConfig,
    bootstrap: usize,
    seed: u64,
) -> Result<SelectionResult> {
    if bootstrap == 0 {
        return Err(invalid("bootstrap must be at least 1"));
    }
    sampler.validate()?;
    let q = build_q(train, metric)?;
    let problem = QuboProblem::new(q, alpha, lambda, k)?;

    // The exhaustive solver is deterministic, so repeating it adds nothing.
    let runs = if sampler.kind == SamplerKind::Exhaustive {
        1
    } else {
        bootstrap
    };
    let mut sets = Vec::with_capacity(runs);
    for b in 0..runs {
        sets.push(sampler.run(&problem, derive_seed(seed, b as u64))?);
    }
    let per_bootstrap: Vec<Option<f64>> = sets.iter().map(SampleSet::best_energy).collect();
    let union = SampleSet::union(sets);
    let mut mask = best_mask(&union)?;
    if mask.k() == 0 {
        mask = union
            .samples
            .iter()
            .find(|s| s.mask.k() > 0)
            .map(|s| s.mask.clone())
            .ok_or_else(|| invalid("sampler returned only the empty selection"))?;
    }
    let winning = crate::qubo::energy(&problem, &mask)?;

    let mut metadata = BTreeMap::new();
    metadata.insert("energy".into(), json!(winning));
    metadata.insert("bootstrap_best_energies".into(), json!(per_bootstrap));
    metadata.insert("sampler".into(), json!(sampler.kind.to_string()));
    metadata.insert("distinct_samples".into(), json!(union.samples.len()));
    Ok(SelectionResult {
        mask,
        method_label: format!("Q{}", metric.label()),
        select_time_us: union.solve_time_us,
        metadata,
    })
}

/// Ranks columns by MIC against the target and keeps the top `floor(fraction * M)`
/// (at least one). Equal scores keep the lower column index first.
pub fn greedy_ranked_select(train: &Dataset, fraction: f64) -> Result<SelectionResult> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let start = Instant::now();
    let scores = train
        .columns()
        .iter()
        .map(|c| mic(c, train.target(), DEFAULT_GRID_EXPONENT))
        .collect::<Result<Vec<f64>>>()?;
    let mask = top_fraction(&scores, fraction);
    let mut metadata = BTreeMap::new();
    metadata.insert("scores".into(), json!(scores));
    Ok(SelectionResult {
        mask,
        method_label: "GR".into(),
        select_time_us: start.elapsed().as_micros() as u64,
        metadata,
    })
}

pub(crate) fn top_fraction(scores: &[f64], fraction: f64) -> FeatureMask {
    let m = scores.len();
    let keep = ((fraction * m as f64).floor() as usize).clamp(1, m.max(1));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut bits = vec![false; m];
    for &i in order.iter().take(keep) {
        bits[i] = true;
    }
    FeatureMask::from_bits(bits)
}

/// Drops the least important remaining feature, one at a time, until `target_k` remain.
/// Ties in importance drop the lower column index.
pub fn rfe_select(
    train: &Dataset,
    model_kind: ModelKind,
    target_k: usize,
    gbr_params: &GbrParams,
) -> Result<SelectionResult> {
    let m = train.n_features();
    if target_k == 0 || target_k > m {
        return Err(invalid(format!(
            "target_k must lie in [1, {m}], got {target_k}"
        )));
    }
    let start = Instant::now();
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut eliminated = Vec::with_capacity(m - target_k);
    let mut iteration = 0;
    while remaining.len() > target_k {
        let cols: Vec<Vec<f64>> = remaining
            .iter()
            .map(|&j| train.column(j).to_vec())
            .collect();
        let ranked = TrainedModel::fit(model_kind, &cols, train.target(), gbr_params)
            .and_then(|model| importance(&model, &column_std(&cols)))
            .map_err(|e| Error::Elimination {
                iteration,
                source: Box::new(e),
            })?;
        let (pos, _) = ranked
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("at least one remaining feature");
        eliminated.push(remaining.remove(pos));
        iteration += 1;
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("elimination_order".into(), json!(eliminated));
    metadata.insert("model".into(), json!(model_kind.to_string()));
    Ok(SelectionResult {
        mask: FeatureMask::from_indices(m, &remaining)?,
        method_label: "RFE".into(),
        select_time_us: start.elapsed().as_micros() as u64,
        metadata,
    })
}

pub fn all_features(train: &Dataset) -> SelectionResult {
    SelectionResult {
        mask: FeatureMask::full(train.n_features()),
        method_label: "All".into(),
        select_time_us: 0,
        metadata: BTreeMap::new(),
    }
}
