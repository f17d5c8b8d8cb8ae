//! Error type shared by the fitting, loss and transform modules.

use thiserror::Error;

/// Everything that can go wrong in the numeric core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The damped normal matrix is not positive definite: the x-values (or
    /// the weight pattern) do not support the requested basis size, so the
    /// fit is meaningless.
    #[error("degenerate system: damped normal matrix is not positive definite (rank-deficient inputs for basis size {n})")]
    DegenerateSystem { n: usize },

    /// A weight was negative or non-finite.
    #[error("invalid weight at index {index}: {value}")]
    InvalidWeight { index: usize, value: f64 },

    /// Two sequences that must agree in length did not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A configuration or construction parameter was out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A homogeneous denominator underflowed the guard during a projective
    /// transform; the point maps (numerically) to infinity.
    #[error("projective denominator underflow at point {index}")]
    NearInfinityPoint { index: usize },
}

impl Error {
    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
