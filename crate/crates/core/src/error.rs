use thiserror::Error;

/// Errors raised by the library layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IclError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid preorder: {0}")]
    InvalidPreorder(String),

    #[error("invalid step cdf: {0}")]
    InvalidCdf(String),

    #[error("level {0} is outside the open interval (0, 1)")]
    LevelOutOfRange(f64),

    #[error("order is not a total preorder (atoms {0} and {1} are incomparable)")]
    NotAChain(usize, usize),

    #[error("enumeration cap exceeded: {n} atoms, cap is {cap}")]
    CapExceeded { n: usize, cap: usize },

    /// A post-condition that holds mathematically failed numerically. Signals a solver bug.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, IclError>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(IclError::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IclError::NonFinite(what))
    }
}
