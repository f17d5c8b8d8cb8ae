//! Scalar abstraction for the numeric core.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the fitting math is generic over.
///
/// Blanket-implemented for anything float-like with primitive conversions;
/// in practice that means `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + 'static
{
}

/// Shorthand for lifting an `f64` constant into the working scalar type.
///
/// Panics only if the scalar cannot represent ordinary literals, which no
/// `Real` implementor of interest fails.
pub(crate) fn c<T: Real>(value: f64) -> T {
    T::from_f64(value).expect("constant must be representable in the scalar type")
}

/// `usize` lifted into the working scalar type.
pub(crate) fn cu<T: Real>(value: usize) -> T {
    T::from_usize(value).expect("count must be representable in the scalar type")
}
