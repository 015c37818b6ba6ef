//! QUBO-based feature selection: dependence metrics, a minimum-redundancy
//! maximum-relevancy binary quadratic model, samplers, baseline selectors, regressors
//! and the benchmark harness that ties them together.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod metrics;
pub mod models;
pub mod qubo;
pub mod rng;
pub mod samplers;
pub mod selection;

pub use error::{Error, RemoteError, Result};
