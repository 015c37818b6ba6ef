use std::time::Instant;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Sample, SampleSet};
use crate::dataset::FeatureMask;
use crate::error::{invalid, Result};
use crate::qubo::{energy, expand_penalized, QuboProblem};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Geometric,
    Linear,
}

/// Inverse-temperature trajectory. Betas apply to energies divided by the problem's
/// objective scale (largest `|alpha * Q_ij|`), so one schedule fits every `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub interpolation: Interpolation,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            beta_start: 10.0,
            beta_end: 1000.0,
            interpolation: Interpolation::Geometric,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(invalid("sweeps must be positive"));
        }
        if !(self.beta_start > 0.0 && self.beta_end > self.beta_start && self.beta_end.is_finite())
        {
            return Err(invalid(format!(
                "need 0 < beta_start < beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    pub fn betas(&self) -> Vec<f64> {
        let n = self.sweeps;
        if n == 1 {
            return vec![self.beta_end];
        }
        (0..n)
            .map(|s| {
                let t = s as f64 / (n - 1) as f64;
                match self.interpolation {
                    Interpolation::Geometric => {
                        self.beta_start * (self.beta_end / self.beta_start).powf(t)
                    }
                    Interpolation::Linear => {
                        self.beta_start + t * (self.beta_end - self.beta_start)
                    }
                }
            })
            .collect()
    }
}

/// Past this many units of `beta * dE` a move is rejected without drawing a number.
const REJECT_BEYOND: f64 = 40.0;

/// Metropolis annealing on the penalty-expanded model.
///
/// Every shot starts from a uniformly random mask and runs `sweeps` passes. A pass
/// proposes each single-bit flip in index order, then for each selected bit (in the
/// order they were selected) one swap with a random unselected bit. Flips let the selection size drift under a soft
/// penalty; swaps move along a fixed size when the penalty is stiff. Shot `s` draws
/// from stream `s` of `seed`, so results do not depend on thread count. Returned
/// energies are recomputed exactly with [`energy`].
pub fn simulated_anneal(
    problem: &QuboProblem,
    shots: usize,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<SampleSet> {
    let wall = Instant::now();
    problem.validate()?;
    schedule.validate()?;
    if shots == 0 {
        return Err(invalid("shots must be positive"));
    }
    let m = problem.size();
    let expanded = expand_penalized(problem);
    let scale = objective_scale(problem, expanded.matrix.max_abs());

    let mut diag = vec![0.0; m];
    let mut coupling = vec![0.0; m * m];
    for i in 0..m {
        diag[i] = expanded.matrix.get(i, i) / scale;
        for j in i + 1..m {
            let c = expanded.matrix.get(i, j) / scale;
            coupling[i * m + j] = c;
            coupling[j * m + i] = c;
        }
    }
    let betas = schedule.betas();

    let sweep_start = Instant::now();
    let finals: Vec<Vec<bool>> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = rng::stream(seed, shot as u64);
            anneal_one(&diag, &coupling, &betas, &mut rng)
        })
        .collect();
    let solve_time_us = sweep_start.elapsed().as_micros() as u64;

    let mut counts: std::collections::BTreeMap<Vec<bool>, usize> = Default::default();
    for bits in finals {
        *counts.entry(bits).or_default() += 1;
    }
    let samples = counts
        .into_iter()
        .map(|(bits, occurrences)| {
            let mask = FeatureMask::from_bits(bits);
            Ok(Sample {
                energy: energy(problem, &mask)?,
                mask,
                occurrences,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet::from_samples(
        samples,
        shots,
        solve_time_us,
        wall.elapsed().as_micros() as u64,
    ))
}

fn objective_scale(problem: &QuboProblem, expanded_max: f64) -> f64 {
    let objective = problem.alpha * problem.q.max_abs();
    if objective > 0.0 {
        objective
    } else if expanded_max > 0.0 {
        expanded_max
    } else {
        1.0
    }
}

fn anneal_one<R: Rng>(diag: &[f64], coupling: &[f64], betas: &[f64], rng: &mut R) -> Vec<bool> {
    let m = diag.len();
    let mut bits: Vec<bool> = (0..m).map(|_| rng.random::<bool>()).collect();
    // local[i] = diag_i + sum_{j != i} J_ij w_j, the energy change of switching i on
    let mut local = diag.to_vec();
    for (i, l) in local.iter_mut().enumerate() {
        let row = &coupling[i * m..(i + 1) * m];
        *l += (0..m).filter(|&j| bits[j]).map(|j| row[j]).sum::<f64>();
    }
    // Selected and unselected indices; `slot[i]` is i's position in whichever list holds it.
    let mut on: Vec<usize> = (0..m).filter(|&i| bits[i]).collect();
    let mut off: Vec<usize> = (0..m).filter(|&i| !bits[i]).collect();
    let mut slot = vec![0; m];
    for (p, &i) in on.iter().enumerate().chain(off.iter().enumerate()) {
        slot[i] = p;
    }
    let migrate = |from: &mut Vec<usize>, to: &mut Vec<usize>, slot: &mut [usize], i: usize| {
        let p = slot[i];
        from.swap_remove(p);
        if p < from.len() {
            slot[from[p]] = p;
        }
        slot[i] = to.len();
        to.push(i);
    };

    for &beta in betas {
        let limit = REJECT_BEYOND / beta;
        for i in 0..m {
            let delta = if bits[i] { -local[i] } else { local[i] };
            if accept(delta, beta, limit, rng) {
                toggle(&mut bits, &mut local, coupling, i);
                if bits[i] {
                    migrate(&mut off, &mut on, &mut slot, i);
                } else {
                    migrate(&mut on, &mut off, &mut slot, i);
                }
            }
        }
        if on.is_empty() || off.is_empty() {
            continue;
        }
        for a in 0..on.len() {
            let b = rng.random_range(0..off.len());
            let (i, j) = (on[a], off[b]);
            let delta = local[j] - local[i] - coupling[i * m + j];
            if accept(delta, beta, limit, rng) {
                toggle(&mut bits, &mut local, coupling, i);
                toggle(&mut bits, &mut local, coupling, j);
                on[a] = j;
                off[b] = i;
                slot[j] = a;
                slot[i] = b;
            }
        }
    }
    bits
}

#[inline]
fn toggle(bits: &mut [bool], local: &mut [f64], coupling: &[f64], i: usize) {
    let m = bits.len();
    let row = &coupling[i * m..(i + 1) * m];
    bits[i] = !bits[i];
    if bits[i] {
        local.iter_mut().zip(row).for_each(|(l, c)| *l += c);
    } else {
        local.iter_mut().zip(row).for_each(|(l, c)| *l -= c);
    }
}

/// Metropolis test: a move raising the energy by `delta` passes when an Exp(1) draw
/// exceeds `beta * delta`, which happens with probability `exp(-beta * delta)`.
/// `limit` is `REJECT_BEYOND / beta`.
#[inline]
fn accept<R: Rng>(delta: f64, beta: f64, limit: f64, rng: &mut R) -> bool {
    delta <= 0.0 || (delta < limit && rng.sample::<f64, _>(Exp1) > beta * delta)
}
