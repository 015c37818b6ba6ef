use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::check_design;
use crate::error::{invalid, Result};

/// Relative ridge used when the centered design is rank deficient.
const RIDGE: f64 = 1e-8;
/// Pivots of `R` below this fraction of the largest count as zero.
const SINGULAR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Ordinary least squares with intercept.
///
/// Columns and target are centered and `Xc w = yc` is solved by QR. When `Xc` is rank
/// deficient (duplicated or constant columns, fewer rows than columns) the system
/// `[Xc; sqrt(r) I] w = [yc; 0]` is solved instead, with `r = 1e-8 * mean(diag(Xc' Xc))`.
pub fn fit_linear(columns: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let n = check_design(columns, Some(y))?;
    let k = columns.len();
    if n == 0 || k == 0 {
        return Err(invalid(format!(
            "linear fit needs n >= 1 and k >= 1, got n={n}, k={k}"
        )));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();

    let mut a = DMatrix::<f64>::zeros(n, k);
    let mut diag_sum = 0.0;
    for (j, (col, mean)) in columns.iter().zip(&means).enumerate() {
        for (i, v) in col.iter().enumerate() {
            let c = v - mean;
            a[(i, j)] = c;
            diag_sum += c * c;
        }
    }
    if diag_sum == 0.0 {
        // every column is constant
        return Ok(LinearModel {
            weights: vec![0.0; k],
            intercept: y_mean,
        });
    }
    let b = DVector::<f64>::from_iterator(n, y.iter().map(|v| v - y_mean));

    let w = match solve_qr(a.clone(), b.clone()) {
        Some(w) => w,
        None => {
            let root = (RIDGE * diag_sum / k as f64).sqrt();
            let mut stacked = a.insert_rows(n, k, 0.0);
            for j in 0..k {
                stacked[(n + j, j)] = root;
            }
            solve_qr(stacked, b.insert_rows(n, k, 0.0))
                .ok_or_else(|| invalid("least-squares system is singular"))?
        }
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(invalid("linear fit produced non-finite coefficients"));
    }
    Ok(LinearModel { weights, intercept })
}

/// Least squares through a thin QR. `None` when `R` is numerically singular.
fn solve_qr(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    if a.nrows() < a.ncols() {
        return None;
    }
    let qr = a.qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= SINGULAR * scale) {
        return None;
    }
    let rhs = qr.q().transpose() * b;
    r.solve_upper_triangular(&rhs)
}

pub fn predict_linear(model: &LinearModel, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    if columns.len() != model.weights.len() {
        return Err(invalid(format!(
            "model has {} weights but input has {} columns",
            model.weights.len(),
            columns.len()
        )));
    }
    let n = check_design(columns, None)?;
    let mut out = vec![model.intercept; n];
    for (col, w) in columns.iter().zip(&model.weights) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += w * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = vec![vec![0.0, 1.0, 2.0, 3.0, 4.0]];
        let y: Vec<f64> = x[0].iter().map(|v| 2.0 * v).collect();
        let m = fit_linear(&x, &y).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-8);
        assert!(m.intercept.abs() < 1e-8);
    }

    #[test]
    fn constant_target() {
        let x = vec![vec![1.0, 5.0, 2.0], vec![0.0, 1.0, 1.0]];
        let m = fit_linear(&x, &[4.0, 4.0, 4.0]).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((m.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_columns_do_not_abort() {
        let c = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![2.0, 4.0, 6.0, 8.0];
        let m = fit_linear(&[c.clone(), c.clone()], &y).unwrap();
        assert!((m.weights[0] + m.weights[1] - 2.0).abs() < 1e-6);
        let constant = fit_linear(&[vec![3.0; 4]], &y).unwrap();
        assert_eq!(constant.weights, vec![0.0]);
        assert!((constant.intercept - 5.0).abs() < 1e-12);
    }

    #[test]
    fn prediction_examples() {
        let m = LinearModel {
            weights: vec![2.0],
            intercept: 1.0,
        };
        assert_eq!(predict_linear(&m, &[vec![3.0]]).unwrap(), vec![7.0]);
        assert_eq!(
            predict_linear(&m, &[vec![0.0, 0.0]]).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(predict_linear(&m, &[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(fit_linear(&[vec![1.0, f64::NAN]], &[1.0, 2.0]).is_err());
        assert!(fit_linear(&[vec![1.0, 2.0]], &[1.0, f64::INFINITY]).is_err());
    }
}
