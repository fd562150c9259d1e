use thiserror::Error;

/// Errors raised across the crate.
///
/// Validation-style checks (bistability, comparison, generation, ...) return
/// reports instead; these variants cover contract violations and numerical
/// failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("infeasible rate design: negative entries {violations:?}")]
    Infeasible { violations: Vec<String> },
    #[error("solver instability at t={time}: value {value} at index {index} outside [{lo}, {hi}]")]
    Instability {
        time: f64,
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("under-resolved interface: need at least {required} cells per dimension, got {got}")]
    UnderResolved { required: usize, got: usize },
    #[error("bisection bracket not found: {0}")]
    Bracketing(String),
    #[error("domain too small: {0}")]
    DomainSize(String),
    #[error("front extraction failed: {0}")]
    Extraction(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
