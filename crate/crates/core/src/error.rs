use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("`{0}` must be sorted ascending")]
    Unsorted(&'static str),

    #[error("`{what}` needs at least {need} elements, got {got}")]
    TooFew {
        what: &'static str,
        need: usize,
        got: usize,
    },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("path enumeration exceeded the budget of {budget} paths")]
    BudgetExceeded { budget: usize },

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
}

/// Rejects NaN and infinities.
#[inline]
pub(crate) fn finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(name))
    }
}
