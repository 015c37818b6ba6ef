use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or unusable input data. `row` and `column` are 1-based when present.
    #[error("load error{}: {message}", location(*row, *column))]
    Load {
        row: Option<usize>,
        column: Option<usize>,
        message: String,
    },

    #[error("problem too large for exhaustive enumeration: {size} variables (limit {limit})")]
    TooLarge { size: usize, limit: usize },

    #[error("metric failed for columns {pair}: {source}")]
    Metric {
        pair: String,
        #[source]
        source: Box<Error>,
    },

    #[error("model fit failed at elimination step {iteration}: {source}")]
    Elimination {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Remote(#[from] RemoteError),

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("configuration error: {0}")]
    Config(String),
}

/// Failures of the remote sampler client. None of these are fatal to a benchmark run.
#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("network error talking to {endpoint}: {message}")]
    Network { endpoint: String, message: String },

    #[error("request to {endpoint} timed out after {timeout_ms} ms")]
    Timeout { endpoint: String, timeout_ms: u64 },

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("energy mismatch for sample {index}: reported {reported}, recomputed {recomputed}")]
    EnergyMismatch {
        index: usize,
        reported: f64,
        recomputed: f64,
    },
}

fn location(row: Option<usize>, column: Option<usize>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" at row {r}, column {c}"),
        (Some(r), None) => format!(" at row {r}"),
        (None, Some(c)) => format!(" in column {c}"),
        (None, None) => String::new(),
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
