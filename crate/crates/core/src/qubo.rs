//! Minimum-redundancy maximum-relevancy as a binary quadratic model.
//!
//! Relevancies sit negated on the diagonal of an upper-triangular `Q`, pairwise
//! redundancies in the strict upper triangle. The energy of a selection `w` is
//! `alpha * sum_{i<=j} w_i Q_ij w_j + lambda * (sum_i w_i - k)^2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMask};
use crate::error::{invalid, Error, Result};
use crate::metrics::{distance, MetricKind};

/// Dense upper-triangular square matrix; the lower triangle is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl QuboMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![0.0; size * size],
        }
    }

    /// From full square rows; anything below the diagonal must be zero.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut q = Self::zeros(size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(invalid(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(invalid(format!("non-finite coefficient at ({i}, {j})")));
                }
                if j < i && v != 0.0 {
                    return Err(invalid(format!(
                        "lower-triangle entry ({i}, {j}) = {v} must be zero"
                    )));
                }
                if j >= i {
                    q.entries[i * size + j] = v;
                }
            }
        }
        Ok(q)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    /// Sets an upper-triangle coefficient. Panics when `i > j`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i <= j, "QuboMatrix stores the upper triangle only");
        self.entries[i * self.size + j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.size.max(1))
            .map(<[f64]>::to_vec)
            .take(self.size)
            .collect()
    }

    /// `sum_{i<=j} w_i Q_ij w_j`.
    pub fn evaluate(&self, bits: &[bool]) -> f64 {
        debug_assert_eq!(bits.len(), self.size);
        let on: Vec<usize> = (0..self.size).filter(|&i| bits[i]).collect();
        let mut total = 0.0;
        for (a, &i) in on.iter().enumerate() {
            let row = &self.entries[i * self.size..(i + 1) * self.size];
            for &j in &on[a..] {
                total += row[j];
            }
        }
        total
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Diagonal nonpositive and strict upper triangle nonnegative.
    pub fn has_mrmr_signs(&self) -> bool {
        (0..self.size)
            .all(|i| self.get(i, i) <= 0.0 && (i + 1..self.size).all(|j| self.get(i, j) >= 0.0))
    }
}

/// A complete penalized instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboProblem {
    pub q: QuboMatrix,
    pub alpha: f64,
    pub lambda: f64,
    pub k: usize,
}

impl QuboProblem {
    pub fn new(q: QuboMatrix, alpha: f64, lambda: f64, k: usize) -> Result<Self> {
        let p = Self {
            q,
            alpha,
            lambda,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.k < 1 || self.k > self.q.size() {
            return Err(invalid(format!(
                "k must lie in [1, {}], got {}",
                self.q.size(),
                self.k
            )));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.q.size()
    }
}

/// Relevancy on the diagonal (negated), redundancy above it.
pub fn build_q(dataset: &Dataset, metric: &MetricKind) -> Result<QuboMatrix> {
    metric.validate()?;
    let m = dataset.n_features();
    let names = dataset.feature_names();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (other, label) = if i == j {
                (dataset.target(), format!("({}, target)", names[i]))
            } else {
                (dataset.column(j), format!("({}, {})", names[i], names[j]))
            };
            distance(metric, dataset.column(i), other).map_err(|e| Error::Metric {
                pair: label,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut q = QuboMatrix::zeros(m);
    for (&(i, j), &d) in pairs.iter().zip(&values) {
        q.set(i, j, if i == j { -d.abs() } else { d.abs() });
    }
    Ok(q)
}

/// `alpha * sum_{i<=j} w_i Q_ij w_j`.
pub fn raw_objective(q: &QuboMatrix, omega: &FeatureMask, alpha: f64) -> Result<f64> {
    if omega.len() != q.size() {
        return Err(invalid(format!(
            "mask length {} does not match problem size {}",
            omega.len(),
            q.size()
        )));
    }
    Ok(alpha * q.evaluate(omega.bits()))
}

/// Scaled objective plus `lambda * (|w| - k)^2`.
pub fn energy(problem: &QuboProblem, omega: &FeatureMask) -> Result<f64> {
    let raw = raw_objective(&problem.q, omega, problem.alpha)?;
    let gap = omega.k() as f64 - problem.k as f64;
    Ok(raw + problem.lambda * gap * gap)
}

/// Pure QUBO form of a penalized problem, with the constant that was dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedQubo {
    pub matrix: QuboMatrix,
    pub offset: f64,
}

impl ExpandedQubo {
    /// `sum_{i<=j} w_i Q'_ij w_j + offset`.
    pub fn energy(&self, bits: &[bool]) -> f64 {
        self.matrix.evaluate(bits) + self.offset
    }
}

/// Folds the cardinality penalty into the coefficients:
/// `Q'_ii = alpha Q_ii + lambda (1 - 2k)`, `Q'_ij = alpha Q_ij + 2 lambda`, offset `lambda k^2`.
pub fn expand_penalized(problem: &QuboProblem) -> ExpandedQubo {
    let m = problem.size();
    let (alpha, lambda, k) = (problem.alpha, problem.lambda, problem.k as f64);
    let mut matrix = QuboMatrix::zeros(m);
    for i in 0..m {
        matrix.set(i, i, alpha * problem.q.get(i, i) + lambda * (1.0 - 2.0 * k));
        for j in i + 1..m {
            matrix.set(i, j, alpha * problem.q.get(i, j) + 2.0 * lambda);
        }
    }
    ExpandedQubo {
        matrix,
        offset: lambda * k * k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> QuboMatrix {
        QuboMatrix::from_rows(&[vec![-0.8, 0.3], vec![0.0, -0.5]]).unwrap()
    }

    fn mask(bits: &[u8]) -> FeatureMask {
        FeatureMask::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn raw_objective_examples() {
        let q = worked();
        assert_eq!(raw_objective(&q, &mask(&[0, 0]), 1000.0).unwrap(), 0.0);
        assert!((raw_objective(&q, &mask(&[1, 0]), 1.0).unwrap() + 0.8).abs() < 1e-12);
        assert!((raw_objective(&q, &mask(&[1, 1]), 1000.0).unwrap() + 1000.0).abs() < 1e-9);
        assert!(raw_objective(&q, &mask(&[1]), 1.0).is_err());
    }

    #[test]
    fn energy_examples() {
        let p = QuboProblem::new(worked(), 1.0, 10.0, 1).unwrap();
        assert!((energy(&p, &mask(&[1, 1])).unwrap() - 9.0).abs() < 1e-12);
        assert!((energy(&p, &mask(&[1, 0])).unwrap() + 0.8).abs() < 1e-12);
        let p2 = QuboProblem::new(worked(), 1.0, 10.0, 2).unwrap();
        assert!((energy(&p2, &mask(&[0, 0])).unwrap() - 40.0).abs() < 1e-12);
        assert!((energy(&p2, &mask(&[1, 1])).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expansion_examples() {
        let p = QuboProblem::new(worked(), 1.0, 10.0, 1).unwrap();
        let e = expand_penalized(&p);
        assert!((e.matrix.get(0, 0) - (-0.8 - 10.0)).abs() < 1e-12);
        assert!((e.matrix.get(0, 1) - (0.3 + 20.0)).abs() < 1e-12);
        assert!((e.matrix.get(1, 1) - (-0.5 - 10.0)).abs() < 1e-12);
        assert_eq!(e.matrix.get(1, 0), 0.0);
        assert_eq!(e.offset, 10.0);

        let p0 = QuboProblem::new(worked(), 3.0, 0.0, 2).unwrap();
        let e0 = expand_penalized(&p0);
        assert_eq!(e0.offset, 0.0);
        assert_eq!(e0.matrix.get(0, 1), 3.0 * 0.3);
        assert_eq!(e0.matrix.get(0, 0), 3.0 * -0.8);
    }

    #[test]
    fn problem_validation() {
        assert!(QuboProblem::new(worked(), 0.0, 1.0, 1).is_err());
        assert!(QuboProblem::new(worked(), 1.0, -1.0, 1).is_err());
        assert!(QuboProblem::new(worked(), 1.0, 1.0, 0).is_err());
        assert!(QuboProblem::new(worked(), 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn from_rows_rejects_lower_triangle() {
        assert!(QuboMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 1.0]]).is_err());
        assert!(QuboMatrix::from_rows(&[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn build_q_two_features() {
        let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let x2 = vec![2.0, 1.0, 4.0, 3.0, 5.0];
        let y = vec![1.5, 2.5, 2.0, 4.5, 5.0];
        let d = Dataset::from_columns(vec![x1.clone(), x2.clone()], y.clone()).unwrap();
        let q = build_q(&d, &MetricKind::Pcc).unwrap();
        let pcc = crate::metrics::pcc;
        assert!((q.get(0, 0) + pcc(&x1, &y).unwrap().abs()).abs() < 1e-15);
        assert!((q.get(1, 1) + pcc(&x2, &y).unwrap().abs()).abs() < 1e-15);
        assert!((q.get(0, 1) - pcc(&x1, &x2).unwrap().abs()).abs() < 1e-15);
        assert_eq!(q.get(1, 0), 0.0);
        assert!(q.has_mrmr_signs());
    }

    #[test]
    fn duplicated_column_is_fully_redundant() {
        let x = vec![0.3, 1.2, 0.7, 2.5, 1.9, 0.1];
        let y = vec![1.0, 2.0, 1.5, 3.0, 2.2, 0.4];
        let d = Dataset::from_columns(vec![x.clone(), x], y).unwrap();
        let q = build_q(&d, &MetricKind::Pcc).unwrap();
        assert!((q.get(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(q.get(0, 0), q.get(1, 1));
    }

    #[test]
    fn metric_errors_name_the_pair() {
        let d = Dataset::from_columns(
            vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let err = build_q(&d, &MetricKind::Mi { k_neighbors: 5 }).unwrap_err();
        assert!(err.to_string().contains("(x1, target)"), "{err}");
    }
}
