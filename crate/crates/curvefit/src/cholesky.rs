//! Small dense Cholesky factorization for the damped normal matrix.
//!
//! Systems here are tiny (basis sizes of 2–5), so a plain row-major
//! factorization beats pulling in a linear-algebra stack and keeps the
//! backward pass free to reuse the factor for extra solves.

use crate::scalar::Real;

/// Lower-triangular factor L with A = L·Lᵀ, stored row-major (full n×n,
/// upper entries zero).
#[derive(Debug, Clone)]
pub(crate) struct CholeskyFactor<T> {
    n: usize,
    l: Vec<T>,
}

/// Factors a symmetric matrix (row-major, full storage).
///
/// Returns `None` when any pivot is non-finite, non-positive, or below
/// `pivot_floor` — the caller's signal that the matrix is not positive
/// definite for its purposes.
pub(crate) fn factor<T: Real>(a: &[T], n: usize, pivot_floor: T) -> Option<CholeskyFactor<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for k in 0..n {
        let mut d = a[k * n + k];
        for j in 0..k {
            d -= l[k * n + j] * l[k * n + j];
        }
        if !d.is_finite() || d <= T::zero() || d < pivot_floor {
            return None;
        }
        let dk = d.sqrt();
        l[k * n + k] = dk;
        for i in (k + 1)..n {
            let mut s = a[i * n + k];
            for j in 0..k {
                s -= l[i * n + j] * l[k * n + j];
            }
            l[i * n + k] = s / dk;
        }
    }
    Some(CholeskyFactor { n, l })
}

impl<T: Real> CholeskyFactor<T> {
    /// Solves A·x = b by forward then backward substitution.
    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let l = &self.l;
        // L·z = b
        let mut z = vec![T::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= l[i * n + j] * z[j];
            }
            z[i] = s / l[i * n + i];
        }
        // Lᵀ·x = z
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= l[j * n + i] * x[j];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }
}
