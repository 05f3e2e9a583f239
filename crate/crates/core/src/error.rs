use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label not in {{-1,+1}}: y[{index}] = {value}")]
    BadLabel { index: usize, value: f64 },

    #[error("non-finite entry at X[{row}, {col}]")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "coordinate {index} (|beta*| = {magnitude}) lies strictly between the weak \
         threshold {weak} and the strong threshold {strong}"
    )]
    UnclassifiedSignal {
        index: usize,
        magnitude: f64,
        weak: f64,
        strong: f64,
    },

    #[error("solver diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("zero column {0} cannot be normalized")]
    ZeroColumn(usize),

    #[error("brute-force coherence needs n <= {max}, got n = {n}")]
    TooManyRows { n: usize, max: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
