use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "grid too narrow: mode {mode} has |phi| = {value:.3e} at the boundary (limit {limit:.1e})"
    )]
    GridTooNarrow { mode: usize, value: f64, limit: f64 },

    #[error("caustic: |sin(omega*tau)| = {sin:.3e} is below the tolerance {tolerance:.1e}; use the spectral sum")]
    Caustic { sin: f64, tolerance: f64 },

    #[error("wrong kernel kind: expected {expected}, found {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("time {tau} is not a sample of the kernel window")]
    TimeNotInWindow { tau: f64 },

    #[error("insufficient span: {0}")]
    InsufficientSpan(String),

    #[error("unresolved: {0}")]
    Unresolved(String),

    #[error("input not decayed at the domain ends: {0}")]
    NotDecayed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
