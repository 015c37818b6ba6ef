//! Kraskov-Stögbauer-Grassberger k-nearest-neighbour mutual information (algorithm 1,
//! max-norm neighbourhoods), in nats.

use rand::Rng;
use statrs::function::gamma::digamma;

use super::check_pair;
use crate::error::{invalid, Result};
use crate::rng;

const JITTER: f64 = 1e-10;

/// `psi(N) + psi(k) - <psi(n_x + 1) + psi(n_y + 1)>`.
///
/// Each column gets a tiny deterministic jitter (1e-10 of its range) seeded from its
/// contents, which breaks ties in ordinal or repeated values. Because the jitter only
/// depends on the column itself, the estimate is exactly symmetric in its arguments.
/// Can come out slightly negative for independent inputs.
pub fn mi_knn(x: &[f64], y: &[f64], k_neighbors: usize) -> Result<f64> {
    check_pair(x, y, 1)?;
    let n = x.len();
    if k_neighbors == 0 || n <= k_neighbors {
        return Err(invalid(format!(
            "need more than k_neighbors = {k_neighbors} samples, got {n}"
        )));
    }
    let xs = jittered(x);
    let ys = jittered(y);

    let mut joint = Vec::with_capacity(n - 1);
    let mut acc = 0.0;
    for i in 0..n {
        joint.clear();
        joint.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (xs[j] - xs[i]).abs().max((ys[j] - ys[i]).abs())),
        );
        let (_, eps, _) = joint.select_nth_unstable_by(k_neighbors - 1, f64::total_cmp);
        let eps = *eps;
        let mut nx = 0usize;
        let mut ny = 0usize;
        for j in (0..n).filter(|&j| j != i) {
            if (xs[j] - xs[i]).abs() < eps {
                nx += 1;
            }
            if (ys[j] - ys[i]).abs() < eps {
                ny += 1;
            }
        }
        acc += digamma((nx + 1) as f64) + digamma((ny + 1) as f64);
    }
    Ok(digamma(n as f64) + digamma(k_neighbors as f64) - acc / n as f64)
}

fn jittered(col: &[f64]) -> Vec<f64> {
    let seed = col.iter().fold(0x51_7CC1_B727_220A_u64, |h, v| {
        rng::derive_seed(h, v.to_bits())
    });
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    let scale = JITTER * if range > 0.0 { range } else { 1.0 };
    let mut rng = rng::stream(seed, 0);
    col.iter()
        .map(|&v| v + scale * (rng.random::<f64>() - 0.5))
        .collect()
}
