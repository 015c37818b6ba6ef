//! Solvers for [`QuboProblem`]s: exhaustive enumeration, simulated annealing and a
//! client for a remote annealer-style service.

mod anneal;
mod exhaustive;
pub mod remote;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMask;
use crate::error::{invalid, Error, Result};
use crate::qubo::QuboProblem;

pub use anneal::{simulated_anneal, AnnealSchedule, Interpolation};
pub use exhaustive::{exhaustive_solve, EXHAUSTIVE_LIMIT};
pub use remote::remote_sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub mask: FeatureMask,
    pub energy: f64,
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    /// Ascending by energy.
    pub samples: Vec<Sample>,
    pub shots: usize,
    pub solve_time_us: u64,
    pub wall_time_us: u64,
    /// Lowest energy above the minimum, when the sampler knows it (exhaustive only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner_up_energy: Option<f64>,
}

impl SampleSet {
    /// Merges identical masks and sorts by energy, then size, then bit pattern.
    pub fn from_samples(
        samples: Vec<Sample>,
        shots: usize,
        solve_time_us: u64,
        wall_time_us: u64,
    ) -> Self {
        let mut merged: BTreeMap<FeatureMask, Sample> = BTreeMap::new();
        for s in samples {
            merged
                .entry(s.mask.clone())
                .and_modify(|e| e.occurrences += s.occurrences)
                .or_insert(s);
        }
        let mut samples: Vec<Sample> = merged.into_values().collect();
        samples.sort_by(compare_samples);
        Self {
            samples,
            shots,
            solve_time_us,
            wall_time_us,
            runner_up_energy: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.samples.iter().map(|s| s.energy).min_by(f64::total_cmp)
    }

    /// Union of several sample sets; shots and timings add up.
    pub fn union(sets: impl IntoIterator<Item = SampleSet>) -> Self {
        let (mut samples, mut shots, mut solve, mut wall) = (Vec::new(), 0, 0, 0);
        for s in sets {
            samples.extend(s.samples);
            shots += s.shots;
            solve += s.solve_time_us;
            wall += s.wall_time_us;
        }
        Self::from_samples(samples, shots, solve, wall)
    }
}

fn compare_samples(a: &Sample, b: &Sample) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then(a.mask.k().cmp(&b.mask.k()))
        .then(a.mask.cmp(&b.mask))
}

/// Energies closer than this (relative) count as a tie.
pub(crate) fn energies_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Lowest-energy mask. Ties go to the smaller selection, then to the lexicographically
/// smallest bit pattern; an empty selection only wins when nothing else is tied.
pub fn best_mask(set: &SampleSet) -> Result<FeatureMask> {
    let best = set.best_energy().ok_or(Error::EmptySampleSet)?;
    let tied = set.samples.iter().filter(|s| energies_tie(s.energy, best));
    let pick = tied
        .min_by(|a, b| {
            (a.mask.k() == 0)
                .cmp(&(b.mask.k() == 0))
                .then(a.mask.k().cmp(&b.mask.k()))
                .then(a.mask.cmp(&b.mask))
        })
        .expect("at least one sample at the minimum");
    Ok(pick.mask.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Sa,
    Exhaustive,
    Remote,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sa => "sa",
            Self::Exhaustive => "exhaustive",
            Self::Remote => "remote",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sa" => Ok(Self::Sa),
            "exhaustive" => Ok(Self::Exhaustive),
            "remote" => Ok(Self::Remote),
            other => Err(invalid(format!(
                "unknown sampler {other:?} (expected sa, exhaustive or remote)"
            ))),
        }
    }
}

/// Everything needed to run one sampler query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub shots: usize,
    pub schedule: AnnealSchedule,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    /// Retry with simulated annealing when the remote sampler fails.
    pub fallback_to_sa: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Sa,
            shots: 10_000,
            schedule: AnnealSchedule::default(),
            endpoint: None,
            timeout_ms: 30_000,
            fallback_to_sa: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(invalid("shots must be positive"));
        }
        self.schedule.validate()?;
        if self.kind == SamplerKind::Remote && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(invalid("the remote sampler needs an endpoint (--endpoint)"));
        }
        if self.timeout_ms == 0 {
            return Err(invalid("timeout_ms must be positive"));
        }
        Ok(())
    }

    pub fn run(&self, problem: &QuboProblem, seed: u64) -> Result<SampleSet> {
        match self.kind {
            SamplerKind::Sa => simulated_anneal(problem, self.shots, &self.schedule, seed),
            SamplerKind::Exhaustive => exhaustive_solve(problem),
            SamplerKind::Remote => {
                let endpoint = self
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| invalid("remote sampler without endpoint"))?;
                match remote_sample(problem, endpoint, self.shots, self.timeout_ms) {
                    Err(Error::Remote(_)) if self.fallback_to_sa => {
                        simulated_anneal(problem, self.shots, &self.schedule, seed)
                    }
                    other => other,
                }
            }
        }
    }
}
