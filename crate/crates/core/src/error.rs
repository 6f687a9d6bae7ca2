use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter set or config file content.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: line {line}: {message}")]
    ConfigLine {
        context: String,
        line: usize,
        message: String,
    },

    #[error("shape mismatch: expected {expected}, got {found}")]
    Shape { expected: String, found: String },

    /// Non-finite entry produced by the explicit scheme.
    #[error("numerical blow-up at step {step} (t = {time}): non-finite entry at (x index {i}, theta index {j})")]
    BlowUp {
        step: u64,
        time: f64,
        i: usize,
        j: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("series did not reach tolerance {tol:e} within {kmax} terms (last term {last:e})")]
    NoConvergence { kmax: usize, tol: f64, last: f64 },

    #[error("check failed: {0}")]
    CheckFailed(String),

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

    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ConfigLine { .. } => 2,
            Error::BlowUp { .. } => 3,
            Error::CheckFailed(_) => 4,
            _ => 1,
        }
    }
}
