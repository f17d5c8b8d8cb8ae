//! Experiments built on the differentiable least-squares fit.
//!
//! Two experiment families live here, plus the plumbing they share:
//!
//! * [`toy`] — a small descent study: gradient-descend point coordinates
//!   and/or per-point weights of a line fit until the fitted line matches a
//!   target line under the geometric loss.
//! * [`scene`], [`generator`], [`pipeline`], [`train`] — a synthetic
//!   lane-fitting benchmark: render curve markings into a small image
//!   through a known road-view homography, learn a per-pixel weight
//!   generator either end-to-end through the fit or with a per-pixel
//!   cross-entropy proxy, and compare the resulting curve errors.
//! * [`verify`] — seeded verification sweeps (solver vs dense oracle,
//!   analytic gradients vs finite differences, closed-form losses vs
//!   quadrature) shared by the CLI's `check` command and the test suite.
//!
//! Everything is seeded and single-threaded on purpose: identical configs
//! must reproduce identical bytes in every artifact.

pub mod error;
pub mod generator;
pub mod pipeline;
pub mod scene;
pub mod svg;
pub mod toy;
pub mod train;
pub mod verify;

pub use error::Error;

/// Result alias for the experiment crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
