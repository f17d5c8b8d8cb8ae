//! Polynomial curves and their Vandermonde basis.

use crate::error::Error;
use crate::scalar::Real;
use crate::Result;

/// Coefficients of a polynomial curve, constant term first:
/// `y(x) = coeffs[0] + coeffs[1]·x + … + coeffs[n−1]·xⁿ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveParams<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Real> CurveParams<T> {
    /// Wraps a coefficient vector. At least one coefficient, all finite.
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid_config("curve needs at least one coefficient"));
        }
        if let Some(bad) = coeffs.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid_config(format!(
                "non-finite curve coefficient: {bad}"
            )));
        }
        Ok(CurveParams { coeffs })
    }

    /// Basis size n (degree + 1).
    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Evaluates the curve at `x` (Horner form).
    pub fn evaluate(&self, x: T) -> T {
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

/// Vandermonde row `[1, x, x², …, xⁿ⁻¹]` for basis size `n ≥ 1`.
pub fn vandermonde_row<T: Real>(x: T, n: usize) -> Vec<T> {
    let mut row = Vec::with_capacity(n);
    let mut p = T::one();
    for _ in 0..n {
        row.push(p);
        p *= x;
    }
    row
}
