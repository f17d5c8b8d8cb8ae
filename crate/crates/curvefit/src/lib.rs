//! Weighted least-squares curve fitting with analytic reverse-mode gradients.
//!
//! The crate solves polynomial fits `y ≈ β₀ + β₁x + … + βₙ₋₁xⁿ⁻¹` through
//! weighted point sets via the damped normal equations and a Cholesky
//! factorization, then differentiates the fitted coefficients with respect
//! to every input — weights, y-values, x-values — in closed form. That
//! makes the fit usable as a layer inside a gradient-trained pipeline: a
//! model produces per-point weights, the fit turns them into curve
//! coefficients, and a loss on the coefficients flows back to the model.
//!
//! The pieces:
//!
//! * [`fit`] — the forward solve ([`solve_ls`], [`solve_weighted_ls`]) and
//!   the cached [`FitContext`] the backward pass reuses.
//! * [`grad`] — [`backward_fit`] (reverse-mode gradients by implicit
//!   differentiation of the normal equations) and [`check_gradients`]
//!   (central finite differences).
//! * [`loss`] — closed-form squared-area losses between curves over a
//!   horizon `[0, t]`, with gradients, plus quadrature cross-checks.
//! * [`homography`] — planar projective transform of point sets, forward
//!   and backward. Weights pass through untouched.
//! * [`oracle`] — an independent dense normal-equation solve (Gaussian
//!   elimination, no Cholesky) used for verification sweeps.
//!
//! Everything numeric is generic over the scalar via the [`Real`] trait
//! (`f32` or `f64`); the `F64`-suffixed aliases at the crate root are the
//! concrete types the experiment crates use.

pub mod curve;
pub mod error;
pub mod fit;
pub mod grad;
pub mod homography;
pub mod loss;
pub mod oracle;
pub mod points;
pub mod scalar;

mod cholesky;

pub use curve::{vandermonde_row, CurveParams};
pub use error::Error;
pub use fit::{solve_ls, solve_weighted_ls, solve_weighted_ls_with, Damping, FitContext};
pub use grad::{
    backward_fit, check_gradients, FitGradients, GradCheckConfig, GradCheckEntry,
    GradCheckReport, GradVar, UpstreamGrad,
};
pub use homography::{backward_transform, transform_points, Homography};
pub use loss::{
    area_error, geometric_loss_line, geometric_loss_numeric, geometric_loss_parabola,
    l2_param_loss, LossConfig,
};
pub use points::WeightedPointSet;
pub use scalar::Real;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

// Concrete aliases for the common precisions.
pub type WeightedPointSetF64 = WeightedPointSet<f64>;
pub type WeightedPointSetF32 = WeightedPointSet<f32>;
pub type CurveParamsF64 = CurveParams<f64>;
pub type CurveParamsF32 = CurveParams<f32>;
pub type HomographyF64 = Homography<f64>;
pub type HomographyF32 = Homography<f32>;
