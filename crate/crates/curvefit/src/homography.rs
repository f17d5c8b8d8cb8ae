//! Planar projective transforms of weighted point sets.
//!
//! A homography H (3×3, row-major) maps a point through homogeneous
//! coordinates:
//!
//! ```text
//! x' = (h₀₀x + h₀₁y + h₀₂) / d,   y' = (h₁₀x + h₁₁y + h₁₂) / d,
//! d  =  h₂₀x + h₂₁y + h₂₂
//! ```
//!
//! Weights are attached to points, not coordinates, so they pass through
//! unchanged. The denominator is guarded: a point with `|d|` below
//! [`DENOM_GUARD`] maps to (numerical) infinity and the transform refuses
//! it outright — callers choose view windows so this cannot happen on real
//! data. The matrix itself is configuration, never optimized, so the
//! backward pass only propagates point-coordinate gradients.

use crate::error::Error;
use crate::points::WeightedPointSet;
use crate::scalar::{c, Real};
use crate::Result;

/// Reject homogeneous denominators with |d| below this.
pub const DENOM_GUARD: f64 = 1e-12;

/// Reject matrices with |det| below this (not invertible for our purposes).
pub const DET_GUARD: f64 = 1e-12;

/// A 3×3 projective transform, row-major, validated invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography<T = f64> {
    m: [T; 9],
}

impl<T: Real> Homography<T> {
    pub fn new(m: [T; 9]) -> Result<Self> {
        if let Some(bad) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid_config(format!("non-finite homography entry: {bad}")));
        }
        let h = Homography { m };
        if h.det().abs() <= c(DET_GUARD) {
            return Err(Error::invalid_config(format!(
                "homography is not invertible (|det| = {} ≤ {DET_GUARD})",
                h.det().abs()
            )));
        }
        Ok(h)
    }

    pub fn identity() -> Self {
        let o = T::one();
        let z = T::zero();
        Homography { m: [o, z, z, z, o, z, z, z, o] }
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[T; 9] {
        &self.m
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    /// Inverse transform (adjugate over determinant).
    pub fn inverse(&self) -> Result<Self> {
        let m = &self.m;
        let det = self.det();
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        let mut inv = [T::zero(); 9];
        for (o, a) in inv.iter_mut().zip(adj) {
            *o = a / det;
        }
        Homography::new(inv)
    }

    /// `self ∘ inner`: apply `inner` first, then `self` (matrix product).
    pub fn compose(&self, inner: &Homography<T>) -> Result<Self> {
        let a = &self.m;
        let b = &inner.m;
        let mut p = [T::zero(); 9];
        for r in 0..3 {
            for col in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s += a[r * 3 + k] * b[k * 3 + col];
                }
                p[r * 3 + col] = s;
            }
        }
        Homography::new(p)
    }

    /// Maps one point; `None` when the denominator underflows the guard.
    pub fn map_point(&self, x: T, y: T) -> Option<(T, T)> {
        let m = &self.m;
        let d = m[6] * x + m[7] * y + m[8];
        if d.abs() < c(DENOM_GUARD) {
            return None;
        }
        let xo = (m[0] * x + m[1] * y + m[2]) / d;
        let yo = (m[3] * x + m[4] * y + m[5]) / d;
        Some((xo, yo))
    }
}

/// Transforms every point of a set; weights carry over unchanged.
pub fn transform_points<T: Real>(
    h: &Homography<T>,
    points: &WeightedPointSet<T>,
) -> Result<WeightedPointSet<T>> {
    let m = points.len();
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for i in 0..m {
        let (xo, yo) = h
            .map_point(points.xs()[i], points.ys()[i])
            .ok_or(Error::NearInfinityPoint { index: i })?;
        xs.push(xo);
        ys.push(yo);
    }
    WeightedPointSet::new(xs, ys, points.ws().to_vec())
}

/// Chain rule through the projective quotient: turns gradients w.r.t. the
/// transformed coordinates into gradients w.r.t. the input coordinates.
///
/// `points` are the *inputs* of the forward transform; `d_out_x`/`d_out_y`
/// are the upstream gradients w.r.t. its outputs. Weight gradients pass
/// through unchanged and are not part of this call.
pub fn backward_transform<T: Real>(
    h: &Homography<T>,
    points: &WeightedPointSet<T>,
    d_out_x: &[T],
    d_out_y: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let m = points.len();
    if d_out_x.len() != m {
        return Err(Error::LengthMismatch { left: d_out_x.len(), right: m });
    }
    if d_out_y.len() != m {
        return Err(Error::LengthMismatch { left: d_out_y.len(), right: m });
    }
    let e = h.entries();
    let mut d_x = Vec::with_capacity(m);
    let mut d_y = Vec::with_capacity(m);
    for i in 0..m {
        let (x, y) = (points.xs()[i], points.ys()[i]);
        let d = e[6] * x + e[7] * y + e[8];
        if d.abs() < c(DENOM_GUARD) {
            return Err(Error::NearInfinityPoint { index: i });
        }
        let xo = (e[0] * x + e[1] * y + e[2]) / d;
        let yo = (e[3] * x + e[4] * y + e[5]) / d;
        // ∂x'/∂x = (h₀₀ − x'·h₂₀)/d, and friends.
        let dxo_dx = (e[0] - xo * e[6]) / d;
        let dxo_dy = (e[1] - xo * e[7]) / d;
        let dyo_dx = (e[3] - yo * e[6]) / d;
        let dyo_dy = (e[4] - yo * e[7]) / d;
        d_x.push(d_out_x[i] * dxo_dx + d_out_y[i] * dyo_dx);
        d_y.push(d_out_x[i] * dxo_dy + d_out_y[i] * dyo_dy);
    }
    Ok((d_x, d_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road_view() -> Homography {
        // Mild perspective with the denominator bounded on the unit square:
        // d = 0.8y + 0.6 ∈ [0.6, 1.4].
        Homography::new([0.0, -0.6, 0.6, 0.5, 0.0, -0.25, 0.0, 0.8, 0.6]).unwrap()
    }

    #[test]
    fn identity_leaves_points_unchanged() {
        let points = WeightedPointSet::new(
            vec![0.1, 0.9, -2.0],
            vec![0.4, -0.7, 3.0],
            vec![1.0, 0.5, 2.0],
        )
        .unwrap();
        let out = transform_points(&Homography::identity(), &points).unwrap();
        assert_eq!(out, points);
    }

    #[test]
    fn unit_square_corners_map_to_hand_computed_values() {
        // Worked by hand from the quotient formulas for the road-view
        // matrix: exact fractions −5/12, 5/12, −5/28, 5/28.
        let h = road_view();
        let cases = [
            ((0.0, 0.0), (1.0, -5.0 / 12.0)),
            ((1.0, 0.0), (1.0, 5.0 / 12.0)),
            ((0.0, 1.0), (0.0, -5.0 / 28.0)),
            ((1.0, 1.0), (0.0, 5.0 / 28.0)),
        ];
        for ((x, y), (wx, wy)) in cases {
            let (gx, gy) = h.map_point(x, y).unwrap();
            assert!((gx - wx).abs() < 1e-15, "({x},{y}) → ({gx},{gy})");
            assert!((gy - wy).abs() < 1e-15, "({x},{y}) → ({gx},{gy})");
        }
    }

    #[test]
    fn inverse_round_trips() {
        let h = road_view();
        let inv = h.inverse().unwrap();
        let points = WeightedPointSet::new(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![0.1, 0.9, 0.55, 0.3, 0.7],
            vec![1.0, 0.2, 0.0, 0.7, 1.5],
        )
        .unwrap();
        let there = transform_points(&h, &points).unwrap();
        let back = transform_points(&inv, &there).unwrap();
        for i in 0..points.len() {
            assert!((back.xs()[i] - points.xs()[i]).abs() < 1e-9);
            assert!((back.ys()[i] - points.ys()[i]).abs() < 1e-9);
            assert_eq!(back.ws()[i], points.ws()[i]);
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let a = road_view();
        let b = Homography::new([1.1, 0.2, -0.1, -0.3, 0.9, 0.25, 0.05, -0.02, 1.0]).unwrap();
        let ab = a.compose(&b).unwrap();
        for (x, y) in [(0.2, 0.3), (0.8, 0.9), (0.5, 0.1)] {
            let (bx, by) = b.map_point(x, y).unwrap();
            let (sx, sy) = a.map_point(bx, by).unwrap();
            let (cx, cy) = ab.map_point(x, y).unwrap();
            assert!((sx - cx).abs() < 1e-9, "{sx} vs {cx}");
            assert!((sy - cy).abs() < 1e-9, "{sy} vs {cy}");
        }
    }

    #[test]
    fn near_infinity_point_is_refused_with_index() {
        // d = x − 0.5 vanishes at x = 0.5.
        let h = Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -0.5]).unwrap();
        let points =
            WeightedPointSet::unweighted(vec![0.1, 0.5, 0.9], vec![0.0, 0.0, 0.0]).unwrap();
        let err = transform_points(&h, &points).unwrap_err();
        assert_eq!(err, Error::NearInfinityPoint { index: 1 });
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let err = Homography::new([1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let h = road_view();
        let xs = vec![0.15, 0.4, 0.85];
        let ys = vec![0.2, 0.65, 0.95];
        let points = WeightedPointSet::unweighted(xs.clone(), ys.clone()).unwrap();
        let gx = [0.7, -0.2, 1.3];
        let gy = [-0.5, 0.9, 0.4];

        let scalar = |xs: &[f64], ys: &[f64]| -> f64 {
            let mut l = 0.0;
            for i in 0..xs.len() {
                let (xo, yo) = h.map_point(xs[i], ys[i]).unwrap();
                l += gx[i] * xo + gy[i] * yo;
            }
            l
        };

        let (dx, dy) = backward_transform(&h, &points, &gx, &gy).unwrap();
        let hstep = 1e-6;
        for i in 0..3 {
            let mut xp = xs.clone();
            let mut xm = xs.clone();
            xp[i] += hstep;
            xm[i] -= hstep;
            let num = (scalar(&xp, &ys) - scalar(&xm, &ys)) / (2.0 * hstep);
            assert!((dx[i] - num).abs() < 1e-6 * num.abs().max(1.0), "{} vs {num}", dx[i]);

            let mut yp = ys.clone();
            let mut ym = ys.clone();
            yp[i] += hstep;
            ym[i] -= hstep;
            let num = (scalar(&xs, &yp) - scalar(&xs, &ym)) / (2.0 * hstep);
            assert!((dy[i] - num).abs() < 1e-6 * num.abs().max(1.0), "{} vs {num}", dy[i]);
        }
    }
}
