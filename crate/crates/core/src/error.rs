use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exponent p = {0} is outside the supported range (1, 2]")]
    InvalidExponent(f64),

    #[error("dimension must be positive")]
    EmptySpace,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("t = {t} lies outside the domain of the scalar piece")]
    OutsideDomain { t: f64 },

    #[error("resolvent bracket expansion failed after {0} doublings")]
    BracketFailure(usize),

    #[error("line search exhausted its budget of {0} trials")]
    TrialBudgetExceeded(usize),

    #[error("Lyapunov descent violated at iteration {iteration} by {excess:e}")]
    DescentViolation { iteration: usize, excess: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
