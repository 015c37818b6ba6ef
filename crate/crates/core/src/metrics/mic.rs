//! Maximal information coefficient and its generalized-mean variant.
//!
//! The characteristic matrix is filled with the approximate grid search used by MINE:
//! one axis is equipartitioned into `j` rows and the other axis is split optimally
//! into at most `i` columns by dynamic programming over clumps of points. Both
//! orientations are tried and the larger mutual information wins.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use super::check_pair;
use crate::error::{invalid, Result};

/// Superclump budget per allowed column in the axis optimization.
pub const CLUMP_FACTOR: usize = 15;

const MIN_POWER_BASE: f64 = 1e-12;

/// Grid shape `(x_bins, y_bins)`.
pub type Shape = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicMatrix {
    samples: usize,
    bound: usize,
    entries: BTreeMap<Shape, f64>,
}

impl CharacteristicMatrix {
    pub fn from_entries(
        samples: usize,
        bound: usize,
        entries: impl IntoIterator<Item = (Shape, f64)>,
    ) -> Result<Self> {
        let entries: BTreeMap<Shape, f64> = entries.into_iter().collect();
        for (&(i, j), &v) in &entries {
            if i < 2 || j < 2 || i * j > bound {
                return Err(invalid(format!(
                    "shape ({i}, {j}) outside the admissible grid for bound {bound}"
                )));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            samples,
            bound,
            entries,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Largest admissible grid size `i * j`.
    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn get(&self, shape: Shape) -> Option<f64> {
        self.entries.get(&shape).copied()
    }

    pub fn entries(&self) -> &BTreeMap<Shape, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `max(floor(n^exponent), 4)`; the floor of 4 keeps the 2x2 grid admissible for tiny samples.
pub fn grid_bound(samples: usize, exponent: f64) -> usize {
    ((samples as f64).powf(exponent).floor() as usize).max(4)
}

pub fn characteristic_matrix(
    x: &[f64],
    y: &[f64],
    grid_exponent: f64,
) -> Result<CharacteristicMatrix> {
    check_pair(x, y, 4)?;
    if !(grid_exponent > 0.0 && grid_exponent < 1.0) {
        return Err(invalid(format!(
            "grid_exponent must lie in (0, 1), got {grid_exponent}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite input to characteristic matrix"));
    }
    let n = x.len();
    let bound = grid_bound(n, grid_exponent);
    let mut info: BTreeMap<Shape, f64> = BTreeMap::new();
    for rows in 2..=bound / 2 {
        let max_cols = bound / rows;
        if max_cols < 2 {
            continue;
        }
        // rows along y, columns along x
        let best = optimize_axis(x, &equipartition(y, rows), max_cols);
        for (cols, &v) in best.iter().enumerate().skip(2) {
            let e = info.entry((cols, rows)).or_insert(0.0);
            *e = e.max(v);
        }
        // rows along x, columns along y
        let best = optimize_axis(y, &equipartition(x, rows), max_cols);
        for (cols, &v) in best.iter().enumerate().skip(2) {
            let e = info.entry((rows, cols)).or_insert(0.0);
            *e = e.max(v);
        }
    }
    let entries = info
        .into_iter()
        .map(|((i, j), bits)| ((i, j), normalize(bits, i.min(j))));
    CharacteristicMatrix::from_entries(n, bound, entries)
}

/// Scales mutual information (bits) into [0, 1]; entropy round-off below 1e-12 is zeroed.
fn normalize(bits: f64, min_side: usize) -> f64 {
    let v = bits / (min_side as f64).log2();
    if v < 1e-12 {
        0.0
    } else {
        v.min(1.0)
    }
}

pub fn mic(x: &[f64], y: &[f64], grid_exponent: f64) -> Result<f64> {
    Ok(mic_from_matrix(&characteristic_matrix(
        x,
        y,
        grid_exponent,
    )?))
}

pub fn mic_from_matrix(c: &CharacteristicMatrix) -> f64 {
    c.entries.values().copied().fold(0.0, f64::max)
}

/// `C*(i, j)` = largest entry over all shapes whose grid size does not exceed `i * j`.
pub fn maximal_characteristic_matrix(c: &CharacteristicMatrix) -> CharacteristicMatrix {
    let mut by_size: Vec<(usize, f64)> = c.entries.iter().map(|(&(i, j), &v)| (i * j, v)).collect();
    by_size.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let entries = c
        .entries
        .keys()
        .map(|&(i, j)| {
            let best = by_size
                .iter()
                .take_while(|(size, _)| *size <= i * j)
                .map(|&(_, v)| v)
                .fold(0.0, f64::max);
            ((i, j), best)
        })
        .collect();
    CharacteristicMatrix {
        samples: c.samples,
        bound: c.bound,
        entries,
    }
}

/// Power mean `((1/Z) sum v^p)^(1/p)`; `p = 0` is the geometric mean. For `p <= 0`
/// values below 1e-12 are raised to 1e-12 first.
pub fn generalized_mean(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let z = values.len() as f64;
    let guard = |v: f64| if p <= 0.0 { v.max(MIN_POWER_BASE) } else { v };
    if p == 0.0 {
        return (values.iter().map(|&v| guard(v).ln()).sum::<f64>() / z).exp();
    }
    (values.iter().map(|&v| guard(v).powf(p)).sum::<f64>() / z).powf(1.0 / p)
}

/// Generalized mean of the maximal characteristic matrix, normalised by the number of
/// admissible shapes.
pub fn gmic_from_matrix(c: &CharacteristicMatrix, p: f64) -> f64 {
    let star = maximal_characteristic_matrix(c);
    let values: Vec<f64> = star.entries.values().copied().collect();
    generalized_mean(&values, p).clamp(0.0, 1.0)
}

pub fn gmic(x: &[f64], y: &[f64], p: f64, grid_exponent: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(invalid("GMIC exponent must be finite"));
    }
    Ok(gmic_from_matrix(
        &characteristic_matrix(x, y, grid_exponent)?,
        p,
    ))
}

/// Splits runs of indivisible groups (given by size, in order) into at most `parts`
/// consecutive blocks of roughly equal mass. Returns the block of each group.
fn partition_groups(sizes: &[usize], parts: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut labels = Vec::with_capacity(sizes.len());
    let mut current = 0usize;
    let mut filled = 0usize;
    let mut placed = 0usize;
    let mut desired = n as f64 / parts as f64;
    for &s in sizes {
        let grow = ((filled + s) as f64 - desired).abs();
        let stay = (filled as f64 - desired).abs();
        if filled != 0 && grow >= stay && current + 1 < parts {
            current += 1;
            filled = 0;
            desired = (n - placed) as f64 / (parts - current) as f64;
        }
        labels.push(current);
        filled += s;
        placed += s;
    }
    labels
}

/// Row label of every point when `values` is cut into (at most) `rows` equal-mass
/// rows. Tied values always share a row.
fn equipartition(values: &[f64], rows: usize) -> Vec<usize> {
    let order = sorted_order(values);
    let groups = tie_groups(values, &order);
    let sizes: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let block = partition_groups(&sizes, rows);
    let mut labels = vec![0; values.len()];
    for (g, &b) in groups.iter().zip(&block) {
        for &p in *g {
            labels[p] = b;
        }
    }
    labels
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Consecutive runs of equal values in sorted order.
fn tie_groups<'a>(values: &[f64], order: &'a [usize]) -> Vec<&'a [usize]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for t in 1..=order.len() {
        if t == order.len() || values[order[t]] != values[order[start]] {
            groups.push(&order[start..t]);
            start = t;
        }
    }
    groups
}

/// Best mutual information (bits) between `rows` and a partition of `axis` into at
/// most `c` columns, for every `c` up to `max_cols`. Index 0 and 1 are unused.
fn optimize_axis(axis: &[f64], rows: &[usize], max_cols: usize) -> Vec<f64> {
    let n = axis.len();
    let n_rows = rows.iter().max().map_or(1, |m| m + 1);
    let order = sorted_order(axis);

    // Clumps: maximal runs (in axis order) of tie groups that sit in one row. A tie
    // group spanning several rows is a clump on its own.
    let mut clump_sizes: Vec<usize> = Vec::new();
    let mut prev_row: Option<usize> = None;
    for g in tie_groups(axis, &order) {
        let r = rows[g[0]];
        let uniform = g.iter().all(|&p| rows[p] == r).then_some(r);
        match (uniform, prev_row) {
            (Some(r), Some(pr)) if r == pr => {
                *clump_sizes.last_mut().expect("prev clump") += g.len()
            }
            _ => clump_sizes.push(g.len()),
        }
        prev_row = uniform;
    }

    let budget = CLUMP_FACTOR * max_cols;
    if clump_sizes.len() > budget {
        let block = partition_groups(&clump_sizes, budget);
        let mut merged = vec![0usize; block.last().map_or(0, |b| b + 1)];
        for (&s, &b) in clump_sizes.iter().zip(&block) {
            merged[b] += s;
        }
        clump_sizes = merged;
    }

    // cum[t][r]: points of row r among the first t clumps
    let k = clump_sizes.len();
    let mut cum = vec![vec![0usize; n_rows]; k + 1];
    let mut pos = 0;
    for (t, &s) in clump_sizes.iter().enumerate() {
        let (head, tail) = cum.split_at_mut(t + 1);
        tail[0].copy_from_slice(&head[t]);
        for &p in &order[pos..pos + s] {
            tail[0][rows[p]] += 1;
        }
        pos += s;
    }

    // n_col * H(rows | col) for the column made of clumps s..t, in nats
    let cost = |s: usize, t: usize| -> f64 {
        let total = (0..n_rows).map(|r| cum[t][r] - cum[s][r]).sum::<usize>() as f64;
        (0..n_rows)
            .map(|r| (cum[t][r] - cum[s][r]) as f64)
            .filter(|&m| m > 0.0)
            .map(|m| m * (total / m).ln())
            .sum()
    };
    let h_rows: f64 = cum[k]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum();

    let mut best = vec![0.0; max_cols + 1];
    let mut prev: Vec<f64> = (0..=k)
        .map(|t| if t == 0 { f64::INFINITY } else { cost(0, t) })
        .collect();
    let mut best_cost = prev[k];
    for cols in 2..=max_cols {
        let mut cur = vec![f64::INFINITY; k + 1];
        for t in cols..=k {
            cur[t] = (cols - 1..t)
                .map(|s| prev[s] + cost(s, t))
                .fold(f64::INFINITY, f64::min);
        }
        best_cost = best_cost.min(cur[k]);
        best[cols] = ((h_rows - best_cost / n as f64) / LN_2).max(0.0);
        prev = cur;
    }
    best
}
