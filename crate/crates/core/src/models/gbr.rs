use serde::{Deserialize, Serialize};

use super::check_design;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Kept for interface stability; fitting uses no randomness (no subsampling).
    pub seed: u64,
}

impl Default for GbrParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 2,
            seed: 0,
        }
    }
}

impl GbrParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(invalid("n_trees must be positive"));
        }
        if self.max_depth == 0 {
            return Err(invalid("max_depth must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(invalid("min_samples_leaf must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left. `gain` is the drop in squared error.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, row: impl Fn(usize) -> f64) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if row(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrModel {
    pub base_prediction: f64,
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub n_features: usize,
    /// Training mean squared error before any tree and after each one.
    pub train_loss: Vec<f64>,
}

impl GbrModel {
    pub(crate) fn split_gains(&self) -> Vec<f64> {
        let mut gains = vec![0.0; self.n_features];
        for node in self.trees.iter().flat_map(|t| &t.nodes) {
            if let Node::Split { feature, gain, .. } = *node {
                gains[feature] += gain;
            }
        }
        gains
    }
}

/// Least-squares gradient boosting: each tree fits the current residuals, leaves hold
/// the mean residual of their rows, and predictions advance by `learning_rate` times
/// the tree output.
pub fn fit_gbr(columns: &[Vec<f64>], y: &[f64], params: &GbrParams) -> Result<GbrModel> {
    params.validate()?;
    let n = check_design(columns, Some(y))?;
    if columns.is_empty() {
        return Err(invalid("boosting needs at least one feature"));
    }
    if n < 2 * params.min_samples_leaf {
        return Err(invalid(format!(
            "boosting needs at least {} rows, got {n}",
            2 * params.min_samples_leaf
        )));
    }
    let base = y.iter().sum::<f64>() / n as f64;
    let orders: Vec<Vec<usize>> = columns
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut pred = vec![base; n];
    let mse = |pred: &[f64]| {
        pred.iter()
            .zip(y)
            .map(|(p, t)| (t - p).powi(2))
            .sum::<f64>()
            / n as f64
    };
    let mut train_loss = vec![mse(&pred)];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut residual = vec![0.0; n];
    for _ in 0..params.n_trees {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        let mut builder = Builder {
            columns,
            orders: &orders,
            residual: &residual,
            params,
            nodes: Vec::new(),
            leaf_of: vec![0; n],
        };
        let rows: Vec<usize> = (0..n).collect();
        builder.grow(&rows, 0);
        let Builder { nodes, leaf_of, .. } = builder;
        for i in 0..n {
            if let Node::Leaf { value } = nodes[leaf_of[i]] {
                pred[i] += params.learning_rate * value;
            }
        }
        train_loss.push(mse(&pred));
        trees.push(Tree { nodes });
    }
    Ok(GbrModel {
        base_prediction: base,
        trees,
        learning_rate: params.learning_rate,
        n_features: columns.len(),
        train_loss,
    })
}

pub fn predict_gbr(model: &GbrModel, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    if columns.len() != model.n_features {
        return Err(invalid(format!(
            "model was trained on {} features but input has {}",
            model.n_features,
            columns.len()
        )));
    }
    let n = check_design(columns, None)?;
    Ok((0..n)
        .map(|i| {
            let sum: f64 = model.trees.iter().map(|t| t.eval(|f| columns[f][i])).sum();
            model.base_prediction + model.learning_rate * sum
        })
        .collect())
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    orders: &'a [Vec<usize>],
    residual: &'a [f64],
    params: &'a GbrParams,
    nodes: Vec<Node>,
    leaf_of: Vec<usize>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let split =
            if depth < self.params.max_depth && rows.len() >= 2 * self.params.min_samples_leaf {
                self.best_split(rows)
            } else {
                None
            };
        match split {
            None => {
                let value = rows.iter().map(|&i| self.residual[i]).sum::<f64>() / rows.len() as f64;
                self.nodes[id] = Node::Leaf { value };
                for &i in rows {
                    self.leaf_of[i] = id;
                }
            }
            Some(c) => {
                let col = &self.columns[c.feature];
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| col[i] <= c.threshold);
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    gain: c.gain,
                    left,
                    right,
                };
            }
        }
        id
    }

    /// Highest squared-error reduction over every feature and midpoint threshold. Scanning
    /// features and thresholds in ascending order with a strict comparison keeps the
    /// lowest feature, then lowest threshold, on ties.
    fn best_split(&self, rows: &[usize]) -> Option<Candidate> {
        let n_all = self.residual.len();
        let mut member = vec![false; n_all];
        for &i in rows {
            member[i] = true;
        }
        let n = rows.len();
        let total: f64 = rows.iter().map(|&i| self.residual[i]).sum();
        let sse: f64 = {
            let mean = total / n as f64;
            rows.iter()
                .map(|&i| (self.residual[i] - mean).powi(2))
                .sum()
        };
        let parent = total * total / n as f64;
        let leaf = self.params.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        let mut best_gain = 1e-12 * sse;
        if sse <= 0.0 {
            return None;
        }
        let mut sorted = Vec::with_capacity(n);
        for (f, col) in self.columns.iter().enumerate() {
            sorted.clear();
            sorted.extend(self.orders[f].iter().copied().filter(|&i| member[i]));
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += self.residual[sorted[pos]];
                let n_left = pos + 1;
                let (a, b) = (col[sorted[pos]], col[sorted[pos + 1]]);
                if a == b || n_left < leaf || n - n_left < leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / (n - n_left) as f64
                    - parent;
                if gain > best_gain {
                    best_gain = gain;
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}
