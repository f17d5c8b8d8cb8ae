//! Forward weighted least-squares solve through the damped normal equations.
//!
//! For points `(x_i, y_i)` with weights `w_i` and basis size `n`, the fit
//! minimizes `Σ_i w_i²·(v(x_i)ᵀβ − y_i)²` over `β` by solving
//!
//! ```text
//! (A + λI)·β = b,   A = Σ_i w_i²·v(x_i)·v(x_i)ᵀ,   b = Σ_i w_i²·y_i·v(x_i)
//! ```
//!
//! with a Cholesky factorization. `v(x) = [1, x, …, xⁿ⁻¹]` is the
//! Vandermonde row and `λ` a tiny Tikhonov damping term that keeps
//! marginally conditioned systems solvable. The factorization, rows,
//! residuals and weights are cached in a [`FitContext`] so the backward
//! pass can reuse them without refactoring.

use crate::cholesky::{self, CholeskyFactor};
use crate::curve::{vandermonde_row, CurveParams};
use crate::error::Error;
use crate::points::WeightedPointSet;
use crate::scalar::{c, cu, Real};
use crate::Result;

/// Default damping scale: λ = 1e−10 · max(1, trace(A)/n).
pub const DAMPING_SCALE: f64 = 1e-10;

/// A damped pivot below `DEGENERACY_MARGIN · λ` means the direction is
/// supported only by the damping itself, i.e. the undamped system is
/// rank-deficient there. Data-backed pivots sit ~1e10·λ higher, so the
/// margin separates the two regimes by many orders of magnitude.
pub const DEGENERACY_MARGIN: f64 = 100.0;

/// How λ is chosen for a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping<T = f64> {
    /// λ = scale · max(1, trace(A)/n). The default with scale 1e−10.
    Scaled(T),
    /// λ fixed by the caller. Used to replay solves with the exact damping
    /// of an earlier fit (finite-difference checks depend on this).
    Fixed(T),
}

impl<T: Real> Default for Damping<T> {
    fn default() -> Self {
        Damping::Scaled(c(DAMPING_SCALE))
    }
}

/// Everything the forward solve computed, cached for the backward pass.
#[derive(Debug, Clone)]
pub struct FitContext<T = f64> {
    n: usize,
    m: usize,
    beta: CurveParams<T>,
    chol: CholeskyFactor<T>,
    rows: Vec<T>,      // m×n Vandermonde rows, row-major
    residuals: Vec<T>, // r_i = y_i − v(x_i)ᵀβ
    weights: Vec<T>,
    lambda: T,
}

impl<T: Real> FitContext<T> {
    /// Basis size (degree + 1).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of points.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn beta(&self) -> &CurveParams<T> {
        &self.beta
    }

    /// Damping actually applied to the normal matrix diagonal.
    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Vandermonde row of point `i`.
    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Solves `(A + λI)·x = rhs` reusing the cached factorization.
    pub fn solve_damped_normal(&self, rhs: &[T]) -> Result<Vec<T>> {
        if rhs.len() != self.n {
            return Err(Error::LengthMismatch { left: rhs.len(), right: self.n });
        }
        Ok(self.chol.solve(rhs))
    }
}

/// Ordinary (unit-weight) least-squares fit of basis size `n`.
pub fn solve_ls<T: Real>(
    xs: Vec<T>,
    ys: Vec<T>,
    n: usize,
) -> Result<(CurveParams<T>, FitContext<T>)> {
    let points = WeightedPointSet::unweighted(xs, ys)?;
    solve_weighted_ls(&points, n)
}

/// Weighted least-squares fit with the default damping.
pub fn solve_weighted_ls<T: Real>(
    points: &WeightedPointSet<T>,
    n: usize,
) -> Result<(CurveParams<T>, FitContext<T>)> {
    solve_weighted_ls_with(points, n, Damping::default())
}

/// Weighted least-squares fit with explicit damping control.
pub fn solve_weighted_ls_with<T: Real>(
    points: &WeightedPointSet<T>,
    n: usize,
    damping: Damping<T>,
) -> Result<(CurveParams<T>, FitContext<T>)> {
    if n == 0 {
        return Err(Error::invalid_config("basis size must be at least 1"));
    }
    let m = points.len();
    let mut a = vec![T::zero(); n * n];
    let mut b = vec![T::zero(); n];
    let mut rows = vec![T::zero(); m * n];

    for i in 0..m {
        let x = points.xs()[i];
        let y = points.ys()[i];
        let w2 = points.ws()[i] * points.ws()[i];
        let row = vandermonde_row(x, n);
        rows[i * n..(i + 1) * n].copy_from_slice(&row);
        for j in 0..n {
            let wvj = w2 * row[j];
            b[j] += wvj * y;
            // upper triangle only; mirrored below
            for k in j..n {
                a[j * n + k] += wvj * row[k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[j * n + k] = a[k * n + j];
        }
    }

    let mut trace = T::zero();
    for j in 0..n {
        trace += a[j * n + j];
    }
    let lambda = match damping {
        Damping::Scaled(scale) => scale * T::one().max(trace / cu(n)),
        Damping::Fixed(l) => l,
    };
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(Error::invalid_config(format!("damping must be finite and ≥ 0, got {lambda}")));
    }
    for j in 0..n {
        a[j * n + j] += lambda;
    }

    let chol = cholesky::factor(&a, n, c::<T>(DEGENERACY_MARGIN) * lambda)
        .ok_or(Error::DegenerateSystem { n })?;
    let beta = chol.solve(&b);
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSystem { n });
    }

    let mut residuals = Vec::with_capacity(m);
    for i in 0..m {
        let mut pred = T::zero();
        for j in 0..n {
            pred += rows[i * n + j] * beta[j];
        }
        residuals.push(points.ys()[i] - pred);
    }

    let beta = CurveParams::new(beta)?;
    let ctx = FitContext {
        n,
        m,
        beta: beta.clone(),
        chol,
        rows,
        residuals,
        weights: points.ws().to_vec(),
        lambda,
    };
    Ok((beta, ctx))
}
