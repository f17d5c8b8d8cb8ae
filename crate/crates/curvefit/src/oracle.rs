//! Independent dense solve used to verify the Cholesky fitting path.
//!
//! Deliberately takes the textbook route: build the Vandermonde matrix X
//! explicitly, form XᵀW²X + λI and XᵀW²y by dense matrix products, then
//! solve with Gaussian elimination and partial pivoting. Shares no solver
//! code with [`crate::fit`]; verification sweeps (`check --suite oracle`
//! and the acceptance tests) compare the two routes.

use crate::error::Error;
use crate::points::WeightedPointSet;
use crate::scalar::Real;
use crate::Result;

/// Solves the same damped normal system as `solve_weighted_ls_with` would
/// for damping `Fixed(lambda)`, by an unrelated algorithm.
///
/// Pass `lambda = 0` for the pure normal equations.
pub fn dense_weighted_normal_solve<T: Real>(
    points: &WeightedPointSet<T>,
    n: usize,
    lambda: T,
) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::invalid_config("basis size must be at least 1"));
    }
    let m = points.len();

    // X: m×n Vandermonde, row-major.
    let mut x = vec![T::zero(); m * n];
    for i in 0..m {
        let mut p = T::one();
        for j in 0..n {
            x[i * n + j] = p;
            p *= points.xs()[i];
        }
    }

    // G = XᵀW²X + λI, rhs = XᵀW²y.
    let mut g = vec![T::zero(); n * n];
    let mut rhs = vec![T::zero(); n];
    for j in 0..n {
        for k in 0..n {
            let mut s = T::zero();
            for i in 0..m {
                let w2 = points.ws()[i] * points.ws()[i];
                s += x[i * n + j] * w2 * x[i * n + k];
            }
            g[j * n + k] = s;
        }
        let mut s = T::zero();
        for i in 0..m {
            let w2 = points.ws()[i] * points.ws()[i];
            s += x[i * n + j] * w2 * points.ys()[i];
        }
        rhs[j] = s;
        g[j * n + j] += lambda;
    }

    gaussian_solve(&mut g, &mut rhs, n).ok_or(Error::DegenerateSystem { n })
}

/// In-place Gaussian elimination with partial pivoting on `[a | b]`.
fn gaussian_solve<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Option<Vec<T>> {
    for col in 0..n {
        // pivot row = largest magnitude in the column at or below the diagonal
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for r in (col + 1)..n {
            let mag = a[r * n + col].abs();
            if mag > pivot_mag {
                pivot_row = r;
                pivot_mag = mag;
            }
        }
        if !pivot_mag.is_finite() || pivot_mag <= T::epsilon() * T::epsilon() {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for r in (col + 1)..n {
            let factor = a[r * n + col] / a[col * n + col];
            a[r * n + col] = T::zero();
            for k in (col + 1)..n {
                let update = factor * a[col * n + k];
                a[r * n + k] -= update;
            }
            let upd = factor * b[col];
            b[r] -= upd;
        }
    }
    let mut sol = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in (r + 1)..n {
            s -= a[r * n + k] * sol[k];
        }
        sol[r] = s / a[r * n + r];
        if !sol[r].is_finite() {
            return None;
        }
    }
    Some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let points =
            WeightedPointSet::<f64>::unweighted(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 5.0]).unwrap();
        let beta = dense_weighted_normal_solve(&points, 2, 0.0).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-12);
        assert!((beta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flags_singular_system() {
        let points = WeightedPointSet::unweighted(vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
        assert!(dense_weighted_normal_solve(&points, 2, 0.0).is_err());
    }
}
