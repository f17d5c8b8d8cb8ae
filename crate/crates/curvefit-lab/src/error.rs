//! Error type for the experiment crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Numeric failure inside the fitting core.
    #[error(transparent)]
    Fit(#[from] curvefit::Error),

    /// An optimization drove some quantity into an unusable state; the
    /// learning rate or the instance are at fault, not the arithmetic.
    #[error("diverged at step {step} ({quantity})")]
    DivergedState { step: usize, quantity: &'static str },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A scene file did not match the expected binary layout.
    #[error("scene format: {0}")]
    SceneFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

impl Error {
    /// True for failures that mean "this fit instance is unusable" rather
    /// than "the run is broken" — callers skip and count these.
    pub fn is_degenerate_fit(&self) -> bool {
        matches!(self, Error::Fit(curvefit::Error::DegenerateSystem { .. }))
    }
}
