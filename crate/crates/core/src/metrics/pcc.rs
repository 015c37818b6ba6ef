use super::check_pair;
use crate::error::Result;

/// Sample Pearson correlation. Zero when either input has zero variance.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_anti_correlation() {
        let x = [1.0, 3.0, 2.0, 7.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pcc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((pcc(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_value() {
        // x = (1,2,3), y = (1,3,2): sxy = 1, sxx = syy = 2
        assert!((pcc(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_column_scores_zero() {
        assert_eq!(pcc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(pcc(&[1.0], &[1.0]).is_err());
        assert!(pcc(&[1.0, 2.0], &[1.0]).is_err());
    }
}
