//! Downstream regressors. Feature matrices are column-major: one `Vec<f64>` per
//! feature, as stored by [`Dataset`](crate::dataset::Dataset).

mod gbr;
mod linear;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use gbr::{fit_gbr, predict_gbr, GbrModel, GbrParams, Node, Tree};
pub use linear::{fit_linear, predict_linear, LinearModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lr,
    Gbr,
}

impl ModelKind {
    /// Suffix used in report labels.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Lr => "LR",
            Self::Gbr => "GBR",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lr => "lr",
            Self::Gbr => "gbr",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" | "linear" => Ok(Self::Lr),
            "gbr" => Ok(Self::Gbr),
            other => Err(invalid(format!(
                "unknown model {other:?} (expected lr or gbr)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Linear(LinearModel),
    Gbr(GbrModel),
}

impl TrainedModel {
    pub fn fit(kind: ModelKind, columns: &[Vec<f64>], y: &[f64], gbr: &GbrParams) -> Result<Self> {
        Ok(match kind {
            ModelKind::Lr => Self::Linear(fit_linear(columns, y)?),
            ModelKind::Gbr => Self::Gbr(fit_gbr(columns, y, gbr)?),
        })
    }

    pub fn predict(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Self::Linear(m) => predict_linear(m, columns),
            Self::Gbr(m) => predict_gbr(m, columns),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Self::Linear(m) => m.weights.len(),
            Self::Gbr(m) => m.n_features,
        }
    }
}

pub fn mae(y_pred: &[f64], y_true: &[f64]) -> Result<f64> {
    if y_pred.len() != y_true.len() {
        return Err(invalid(format!(
            "mae needs equal lengths, got {} and {}",
            y_pred.len(),
            y_true.len()
        )));
    }
    if y_pred.is_empty() {
        return Err(invalid("mae of empty vectors"));
    }
    let total: f64 = y_pred.iter().zip(y_true).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / y_pred.len() as f64)
}

/// Population standard deviation of each column.
pub fn column_std(columns: &[Vec<f64>]) -> Vec<f64> {
    columns
        .iter()
        .map(|c| {
            let n = c.len().max(1) as f64;
            let mean = c.iter().sum::<f64>() / n;
            (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

/// Linear: `|w_i| * scale_i`. GBR: summed squared-error reduction of every split on
/// feature `i` (scales unused). Normalized to sum to one unless all are zero.
pub fn importance(model: &TrainedModel, feature_scales: &[f64]) -> Result<Vec<f64>> {
    let raw: Vec<f64> = match model {
        TrainedModel::Linear(m) => {
            if feature_scales.len() != m.weights.len() {
                return Err(invalid(format!(
                    "{} scales for {} weights",
                    feature_scales.len(),
                    m.weights.len()
                )));
            }
            m.weights
                .iter()
                .zip(feature_scales)
                .map(|(w, s)| (w * s).abs())
                .collect()
        }
        TrainedModel::Gbr(m) => m.split_gains(),
    };
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        Ok(raw.into_iter().map(|v| v / total).collect())
    } else {
        Ok(raw)
    }
}

pub(crate) fn check_design(columns: &[Vec<f64>], y: Option<&[f64]>) -> Result<usize> {
    let n = match (columns.first(), y) {
        (Some(c), _) => c.len(),
        (None, Some(y)) => y.len(),
        (None, None) => 0,
    };
    if columns.iter().any(|c| c.len() != n) {
        return Err(invalid("feature columns have different lengths"));
    }
    if let Some(y) = y {
        if y.len() != n {
            return Err(invalid(format!("{n} rows but {} targets", y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite target value"));
        }
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite feature value"));
    }
    Ok(n)
}
