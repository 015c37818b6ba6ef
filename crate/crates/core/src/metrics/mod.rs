//! Dependence measures used to score relevancy (feature vs target) and redundancy
//! (feature vs feature).

mod mi;
mod mic;
mod pcc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use mi::mi_knn;
pub use mic::{
    characteristic_matrix, generalized_mean, gmic, gmic_from_matrix, grid_bound,
    maximal_characteristic_matrix, mic, mic_from_matrix, CharacteristicMatrix, Shape, CLUMP_FACTOR,
};
pub use pcc::pcc;

pub const DEFAULT_K_NEIGHBORS: usize = 3;
pub const DEFAULT_GRID_EXPONENT: f64 = 0.6;
pub const DEFAULT_GMIC_P: f64 = -1.0;

/// Serialized as `{"kind": "mi", "k_neighbors": 3}` and friends; a bare name such as
/// `"gmic"` is also accepted on input and means the default parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    Pcc,
    Mi { k_neighbors: usize },
    Mic { grid_exponent: f64 },
    Gmic { p: f64, grid_exponent: f64 },
}

impl MetricKind {
    pub fn mi() -> Self {
        Self::Mi {
            k_neighbors: DEFAULT_K_NEIGHBORS,
        }
    }

    pub fn mic() -> Self {
        Self::Mic {
            grid_exponent: DEFAULT_GRID_EXPONENT,
        }
    }

    pub fn gmic() -> Self {
        Self::Gmic {
            p: DEFAULT_GMIC_P,
            grid_exponent: DEFAULT_GRID_EXPONENT,
        }
    }

    /// Short upper-case name used in method labels (`QPCC-LR`, `QGMIC-GBR`, ...).
    pub fn label(&self) -> &'static str {
        match self {
            Self::Pcc => "PCC",
            Self::Mi { .. } => "MI",
            Self::Mic { .. } => "MIC",
            Self::Gmic { .. } => "GMIC",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid_ok = |g: f64| g > 0.0 && g < 1.0;
        match *self {
            Self::Pcc => Ok(()),
            Self::Mi { k_neighbors: 0 } => Err(invalid("k_neighbors must be at least 1")),
            Self::Mi { .. } => Ok(()),
            Self::Mic { grid_exponent } | Self::Gmic { grid_exponent, .. }
                if !grid_ok(grid_exponent) =>
            {
                Err(invalid(format!(
                    "grid_exponent must lie in (0, 1), got {grid_exponent}"
                )))
            }
            Self::Gmic { p, .. } if !p.is_finite() => Err(invalid("GMIC exponent must be finite")),
            Self::Mic { .. } | Self::Gmic { .. } => Ok(()),
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TaggedMetric {
    Pcc,
    Mi {
        #[serde(default = "default_k_neighbors")]
        k_neighbors: usize,
    },
    Mic {
        #[serde(default = "default_grid_exponent")]
        grid_exponent: f64,
    },
    Gmic {
        #[serde(default = "default_gmic_p")]
        p: f64,
        #[serde(default = "default_grid_exponent")]
        grid_exponent: f64,
    },
}

fn default_k_neighbors() -> usize {
    DEFAULT_K_NEIGHBORS
}
fn default_grid_exponent() -> f64 {
    DEFAULT_GRID_EXPONENT
}
fn default_gmic_p() -> f64 {
    DEFAULT_GMIC_P
}

impl<'de> Deserialize<'de> for MetricKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Tagged(TaggedMetric),
        }
        match Repr::deserialize(d)? {
            Repr::Name(name) => name.parse().map_err(serde::de::Error::custom),
            Repr::Tagged(TaggedMetric::Pcc) => Ok(Self::Pcc),
            Repr::Tagged(TaggedMetric::Mi { k_neighbors }) => Ok(Self::Mi { k_neighbors }),
            Repr::Tagged(TaggedMetric::Mic { grid_exponent }) => Ok(Self::Mic { grid_exponent }),
            Repr::Tagged(TaggedMetric::Gmic { p, grid_exponent }) => {
                Ok(Self::Gmic { p, grid_exponent })
            }
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label().to_ascii_lowercase())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pcc" => Ok(Self::Pcc),
            "mi" => Ok(Self::mi()),
            "mic" => Ok(Self::mic()),
            "gmic" => Ok(Self::gmic()),
            other => Err(invalid(format!(
                "unknown metric {other:?} (expected pcc, mi, mic or gmic)"
            ))),
        }
    }
}

/// Nonnegative dependence between two columns, as used in the Q matrix.
pub fn distance(metric: &MetricKind, x: &[f64], y: &[f64]) -> Result<f64> {
    metric.validate()?;
    match *metric {
        MetricKind::Pcc => Ok(pcc(x, y)?.abs()),
        MetricKind::Mi { k_neighbors } => Ok(mi_knn(x, y, k_neighbors)?.max(0.0)),
        MetricKind::Mic { grid_exponent } => mic(x, y, grid_exponent),
        MetricKind::Gmic { p, grid_exponent } => gmic(x, y, p, grid_exponent),
    }
}

pub(crate) fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(invalid(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_len {
        return Err(invalid(format!(
            "need at least {min_len} samples, got {}",
            x.len()
        )));
    }
    Ok(())
}
