//! Client for an annealer-style sampling service speaking a small JSON protocol.
//!
//! Request (HTTP POST, `application/json`):
//! `{"linear": {"0": q00, ...}, "quadratic": {"0,1": q01, ...}, "num_reads": n, "offset": c}`
//!
//! Response:
//! `{"samples": [[0,1,...], ...], "energies": [...], "num_occurrences": [...],
//!   "timing": {"qpu_access_time_us": t}}`
//!
//! Reported energies are never trusted: each one is recomputed locally and the whole
//! response is rejected on a mismatch.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Sample, SampleSet};
use crate::dataset::FeatureMask;
use crate::error::{invalid, Error, RemoteError, Result};
use crate::qubo::{energy, expand_penalized, ExpandedQubo, QuboMatrix, QuboProblem};

/// Relative tolerance between reported and recomputed energies.
pub const ENERGY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub linear: BTreeMap<String, f64>,
    pub quadratic: BTreeMap<String, f64>,
    #[serde(default)]
    pub num_reads: usize,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub samples: Vec<Vec<u8>>,
    pub energies: Vec<f64>,
    pub num_occurrences: Vec<usize>,
    pub timing: WireTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTiming {
    pub qpu_access_time_us: f64,
}

impl WireRequest {
    /// Every diagonal term is sent (so the variable count is explicit); zero couplings are omitted.
    pub fn from_expanded(expanded: &ExpandedQubo, num_reads: usize) -> Self {
        let q = &expanded.matrix;
        let m = q.size();
        let linear = (0..m).map(|i| (i.to_string(), q.get(i, i))).collect();
        let quadratic = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .filter(|&(i, j)| q.get(i, j) != 0.0)
            .map(|(i, j)| (format!("{i},{j}"), q.get(i, j)))
            .collect();
        Self {
            linear,
            quadratic,
            num_reads,
            offset: expanded.offset,
        }
    }

    pub fn from_problem(problem: &QuboProblem, num_reads: usize) -> Self {
        Self::from_expanded(&expand_penalized(problem), num_reads)
    }

    /// Rebuilds the coefficient matrix. The variable count is one past the largest index seen.
    pub fn to_expanded(&self) -> Result<ExpandedQubo> {
        let parse_index = |s: &str| -> Result<usize> {
            s.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("variable key {s:?} is not a decimal index")))
        };
        let mut linear = Vec::with_capacity(self.linear.len());
        for (key, &v) in &self.linear {
            linear.push((parse_index(key)?, v));
        }
        let mut quadratic = Vec::with_capacity(self.quadratic.len());
        for (key, &v) in &self.quadratic {
            let (a, b) = key
                .split_once(',')
                .ok_or_else(|| invalid(format!("quadratic key {key:?} is not \"i,j\"")))?;
            let (i, j) = (parse_index(a)?, parse_index(b)?);
            if i >= j {
                return Err(invalid(format!("quadratic key {key:?} needs i < j")));
            }
            quadratic.push((i, j, v));
        }
        let size = linear
            .iter()
            .map(|&(i, _)| i + 1)
            .chain(quadratic.iter().map(|&(_, j, _)| j + 1))
            .max()
            .unwrap_or(0);
        if size == 0 {
            return Err(invalid("QUBO has no variables"));
        }
        let mut values = linear
            .iter()
            .map(|&(_, v)| v)
            .chain(quadratic.iter().map(|&(_, _, v)| v));
        if !self.offset.is_finite() || values.any(|v| !v.is_finite()) {
            return Err(invalid("non-finite coefficient in QUBO"));
        }
        let mut matrix = QuboMatrix::zeros(size);
        for (i, v) in linear {
            matrix.set(i, i, v);
        }
        for (i, j, v) in quadratic {
            matrix.set(i, j, v);
        }
        Ok(ExpandedQubo {
            matrix,
            offset: self.offset,
        })
    }
}

/// Sends `problem` (penalty expanded) to `endpoint` and validates the answer.
pub fn remote_sample(
    problem: &QuboProblem,
    endpoint: &str,
    shots: usize,
    timeout_ms: u64,
) -> Result<SampleSet> {
    let wall = Instant::now();
    problem.validate()?;
    let request = WireRequest::from_problem(problem, shots);
    let response = post(endpoint, &request, timeout_ms)?;
    let (samples, remote_us) = validate_response(problem, &response)?;
    let total = samples.iter().map(|s| s.occurrences).sum();
    Ok(SampleSet::from_samples(
        samples,
        total,
        remote_us,
        wall.elapsed().as_micros() as u64,
    ))
}

fn post(endpoint: &str, request: &WireRequest, timeout_ms: u64) -> Result<WireResponse> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(timeout_ms)))
        .http_status_as_error(true)
        .build()
        .into();
    let map_err = |e: ureq::Error| -> Error {
        match e {
            ureq::Error::Timeout(_) => RemoteError::Timeout {
                endpoint: endpoint.to_string(),
                timeout_ms,
            },
            ureq::Error::StatusCode(code) => {
                RemoteError::MalformedResponse(format!("HTTP status {code}"))
            }
            ureq::Error::Json(e) => RemoteError::MalformedResponse(e.to_string()),
            ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => {
                RemoteError::Timeout {
                    endpoint: endpoint.to_string(),
                    timeout_ms,
                }
            }
            other => RemoteError::Network {
                endpoint: endpoint.to_string(),
                message: other.to_string(),
            },
        }
        .into()
    };
    let mut response = agent.post(endpoint).send_json(request).map_err(map_err)?;
    response
        .body_mut()
        .read_json::<WireResponse>()
        .map_err(map_err)
}

fn validate_response(problem: &QuboProblem, response: &WireResponse) -> Result<(Vec<Sample>, u64)> {
    let malformed = |msg: String| -> Error { RemoteError::MalformedResponse(msg).into() };
    let n = response.samples.len();
    if response.energies.len() != n || response.num_occurrences.len() != n {
        return Err(malformed(format!(
            "{n} samples but {} energies and {} occurrence counts",
            response.energies.len(),
            response.num_occurrences.len()
        )));
    }
    if n == 0 {
        return Err(malformed("no samples returned".into()));
    }
    let t = response.timing.qpu_access_time_us;
    if !(t.is_finite() && t >= 0.0) {
        return Err(malformed(format!("invalid timing {t}")));
    }
    let m = problem.size();
    let mut out = Vec::with_capacity(n);
    for (index, ((bits, &reported), &occurrences)) in response
        .samples
        .iter()
        .zip(&response.energies)
        .zip(&response.num_occurrences)
        .enumerate()
    {
        if bits.len() != m || bits.iter().any(|&b| b > 1) {
            return Err(malformed(format!(
                "sample {index} is not a 0/1 vector of length {m}"
            )));
        }
        if occurrences == 0 {
            return Err(malformed(format!("sample {index} has zero occurrences")));
        }
        let mask = FeatureMask::from_bits(bits.iter().map(|&b| b == 1).collect());
        let recomputed = energy(problem, &mask)?;
        if !reported.is_finite()
            || (reported - recomputed).abs() > ENERGY_TOLERANCE * recomputed.abs().max(1.0)
        {
            return Err(RemoteError::EnergyMismatch {
                index,
                reported,
                recomputed,
            }
            .into());
        }
        out.push(Sample {
            mask,
            energy: recomputed,
            occurrences,
        });
    }
    Ok((out, t.round() as u64))
}
