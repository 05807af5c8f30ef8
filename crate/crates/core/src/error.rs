use thiserror::Error;

use crate::evolution::State;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("data corruption: {0}")]
    DataCorruption(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (last residual {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("iteration is not contracting (differences {history:?})")]
    NonContraction { history: Vec<f64> },

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        last_valid: Option<Box<State>>,
    },

    #[error("constraint integrity lost at t = {t}: {reason}")]
    Integrity { t: f64, reason: String },

    #[error("unsupported checkpoint version: {0}")]
    UnsupportedVersion(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
