use std::time::Instant;

use super::{energies_tie, Sample, SampleSet};
use crate::dataset::FeatureMask;
use crate::error::{Error, Result};
use crate::qubo::{energy, expand_penalized, QuboProblem};

/// Largest problem the exhaustive solver accepts.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Walks all `2^M` masks in Gray-code order with incremental energy updates, then
/// recomputes exact energies for the candidates near the minimum. Returns every mask
/// at the global minimum; `runner_up_energy` holds the next distinct energy level.
pub fn exhaustive_solve(problem: &QuboProblem) -> Result<SampleSet> {
    let start = Instant::now();
    problem.validate()?;
    let m = problem.size();
    if m > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            size: m,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let expanded = expand_penalized(problem);
    let q = &expanded.matrix;
    let coupling = |i: usize, j: usize| if i < j { q.get(i, j) } else { q.get(j, i) };
    let slack = 1e-7 * (1.0 + q.max_abs() * (m * m) as f64);

    let mut field = vec![0.0; m];
    let mut state: u32 = 0;
    let mut e = expanded.offset;

    let mut min = e;
    let mut candidates: Vec<u32> = vec![0];
    let mut candidate_energy: Vec<f64> = vec![e];
    let mut second: Option<(u32, f64)> = None;

    for step in 1u64..(1u64 << m) {
        let bit = step.trailing_zeros() as usize;
        let on = state & (1 << bit) == 0;
        let delta = q.get(bit, bit) + field[bit];
        e += if on { delta } else { -delta };
        state ^= 1 << bit;
        let sign = if on { 1.0 } else { -1.0 };
        for (j, f) in field.iter_mut().enumerate() {
            if j != bit {
                *f += sign * coupling(bit, j);
            }
        }

        if e < min - slack {
            min = e;
            let mut kept = Vec::new();
            let mut kept_energy = Vec::new();
            for (&c, &ce) in candidates.iter().zip(&candidate_energy) {
                if ce <= min + slack {
                    kept.push(c);
                    kept_energy.push(ce);
                } else if second.is_none_or(|(_, se)| ce < se) {
                    second = Some((c, ce));
                }
            }
            candidates = kept;
            candidate_energy = kept_energy;
            candidates.push(state);
            candidate_energy.push(e);
        } else if e <= min + slack {
            min = min.min(e);
            candidates.push(state);
            candidate_energy.push(e);
        } else if second.is_none_or(|(_, se)| e < se) {
            second = Some((state, e));
        }
    }

    let to_mask = |s: u32| FeatureMask::from_bits((0..m).map(|i| s & (1 << i) != 0).collect());
    let mut exact: Vec<(FeatureMask, f64)> = candidates
        .into_iter()
        .map(|s| {
            let mask = to_mask(s);
            let en = energy(problem, &mask)?;
            Ok((mask, en))
        })
        .collect::<Result<_>>()?;
    let best = exact
        .iter()
        .map(|(_, en)| *en)
        .fold(f64::INFINITY, f64::min);
    let mut runner_up = match second {
        Some((s, _)) => Some(energy(problem, &to_mask(s))?),
        None => None,
    };
    exact.retain(|(_, en)| {
        if energies_tie(*en, best) {
            true
        } else {
            runner_up = Some(runner_up.map_or(*en, |r: f64| r.min(*en)));
            false
        }
    });

    let samples: Vec<Sample> = exact
        .into_iter()
        .map(|(mask, energy)| Sample {
            mask,
            energy,
            occurrences: 1,
        })
        .collect();
    let shots = samples.len();
    let elapsed = start.elapsed().as_micros() as u64;
    let mut set = SampleSet::from_samples(samples, shots, elapsed, elapsed);
    set.runner_up_energy = runner_up;
    Ok(set)
}
