//! Independent reference computations. Nothing here calls into the solver or metric
//! internals it is used to check.

use qafs::qubo::{QuboMatrix, QuboProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// MRMR-shaped random problem: diagonal in [-1, 0), strict upper triangle in [0, 1).
pub fn random_problem(m: usize, alpha: f64, lambda: f64, k: usize, seed: u64) -> QuboProblem {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Equal => -r.random::<f64>(),
                    std::cmp::Ordering::Less => r.random::<f64>(),
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect();
    QuboProblem::new(QuboMatrix::from_rows(&rows).unwrap(), alpha, lambda, k).unwrap()
}

/// `alpha * sum_{i<=j} w_i Q_ij w_j + lambda (sum w - k)^2`, straight from the rows.
pub fn direct_energy(rows: &[Vec<f64>], alpha: f64, lambda: f64, k: usize, bits: &[bool]) -> f64 {
    let m = rows.len();
    let mut raw = 0.0;
    for i in 0..m {
        for j in i..m {
            if bits[i] && bits[j] {
                raw += rows[i][j];
            }
        }
    }
    let gap = bits.iter().filter(|&&b| b).count() as f64 - k as f64;
    alpha * raw + lambda * gap * gap
}

pub fn bits_of(code: u64, m: usize) -> Vec<bool> {
    (0..m).map(|i| code >> i & 1 == 1).collect()
}

/// Lowest energy and every mask within `tol` of it, by plain counting over all masks.
pub fn brute_force(problem: &QuboProblem, tol: f64) -> (f64, Vec<Vec<bool>>) {
    let m = problem.size();
    let rows = problem.q.rows();
    let energies: Vec<f64> = (0..1u64 << m)
        .map(|c| {
            direct_energy(
                &rows,
                problem.alpha,
                problem.lambda,
                problem.k,
                &bits_of(c, m),
            )
        })
        .collect();
    let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let minimizers = (0..1u64 << m)
        .filter(|&c| energies[c as usize] <= best + tol)
        .map(|c| bits_of(c, m))
        .collect();
    (best, minimizers)
}

/// Pairs from a standard bivariate normal with correlation `rho`.
pub fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = r.sample(StandardNormal);
        let b: f64 = r.sample(StandardNormal);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    (x, y)
}

pub fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

/// Plug-in mutual information, in bits, between two labelings.
fn plug_in_mi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let na = a.iter().max().unwrap() + 1;
    let nb = b.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0.0; nb]; na];
    for (&i, &j) in a.iter().zip(b) {
        joint[i][j] += 1.0;
    }
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum::<f64>()).collect();
    let pb: Vec<f64> = (0..nb)
        .map(|j| joint.iter().map(|r| r[j]).sum::<f64>())
        .collect();
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = joint[i][j];
            if c > 0.0 {
                mi += c / n * (c * n / (pa[i] * pb[j])).log2();
            }
        }
    }
    mi
}

fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut rank = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Equal-count bins; needs distinct values and `n` divisible by `parts`.
fn equal_bins(values: &[f64], parts: usize) -> Vec<usize> {
    let n = values.len();
    assert_eq!(n % parts, 0);
    ranks(values).into_iter().map(|r| r / (n / parts)).collect()
}

/// Best MI over every way of cutting the sorted `axis` into at most `cols` intervals,
/// against fixed row labels.
fn best_cut(axis: &[f64], rows: &[usize], cols: usize) -> f64 {
    let n = axis.len();
    let rank = ranks(axis);
    let mut best = 0.0f64;
    // cut positions are gaps 1..n between ranked points
    let mut cuts: Vec<usize> = Vec::new();
    fn walk(
        start: usize,
        n: usize,
        left: usize,
        cuts: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        visit(cuts);
        if left == 0 {
            return;
        }
        for c in start..n {
            cuts.push(c);
            walk(c + 1, n, left - 1, cuts, visit);
            cuts.pop();
        }
    }
    walk(1, n, cols - 1, &mut cuts, &mut |cuts: &[usize]| {
        let labels: Vec<usize> = rank
            .iter()
            .map(|&r| cuts.iter().filter(|&&c| r >= c).count())
            .collect();
        best = best.max(plug_in_mi(&labels, rows));
    });
    best
}

/// Characteristic-matrix entry for `x_bins` columns along x and `y_bins` rows along y:
/// the better of (y equal-count, x free) and (x equal-count, y free), normalised.
pub fn characteristic_entry(x: &[f64], y: &[f64], x_bins: usize, y_bins: usize) -> f64 {
    let a = best_cut(x, &equal_bins(y, y_bins), x_bins);
    let b = best_cut(y, &equal_bins(x, x_bins), y_bins);
    a.max(b) / (x_bins.min(y_bins) as f64).log2()
}

/// Least squares with intercept through the normal equations and Gauss-Jordan elimination.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len();
    let k = columns.len() + 1;
    let design = |i: usize, j: usize| if j == 0 { 1.0 } else { columns[j - 1][i] };
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = (0..n).map(|i| design(i, r) * design(i, c)).sum();
        }
        a[r][k] = (0..n).map(|i| design(i, r) * y[i]).sum();
    }
    for p in 0..k {
        let pivot = (p..k)
            .max_by(|&i, &j| a[i][p].abs().partial_cmp(&a[j][p].abs()).unwrap())
            .unwrap();
        a.swap(p, pivot);
        let d = a[p][p];
        for c in p..=k {
            a[p][c] /= d;
        }
        for r in 0..k {
            if r != p {
                let f = a[r][p];
                for c in p..=k {
                    a[r][c] -= f * a[p][c];
                }
            }
        }
    }
    let coef: Vec<f64> = a.iter().map(|row| row[k]).collect();
    (coef[1..].to_vec(), coef[0])
}
