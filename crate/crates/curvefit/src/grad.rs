//! Reverse-mode gradients through the weighted least-squares solve.
//!
//! The fitted coefficients solve `(A + λI)·β = b` with
//! `A = Σ w_i²·v_i·v_iᵀ`, `b = Σ w_i²·y_i·v_i`, `v_i = v(x_i)`. Implicit
//! differentiation gives, for any scalar input θ and upstream gradient
//! `g = ∂L/∂β`,
//!
//! ```text
//! ∂L/∂θ = sᵀ·(∂b/∂θ − (∂A/∂θ)·β),   (A + λI)·s = g
//! ```
//!
//! (λ is treated as a constant of the solve). Expanding per input, with
//! residual `r_i = y_i − v_iᵀβ` and `v′_i = [0, 1, 2x_i, …, (n−1)x_iⁿ⁻²]`:
//!
//! ```text
//! ∂L/∂w_i = 2·w_i·(sᵀv_i)·r_i
//! ∂L/∂y_i = w_i²·(sᵀv_i)
//! ∂L/∂x_i = w_i²·((sᵀv′_i)·r_i − (sᵀv_i)·(βᵀv′_i))
//! ```
//!
//! The solve for `s` reuses the Cholesky factor cached in [`FitContext`];
//! the rest is one pass over the points. [`check_gradients`] verifies all
//! three families against central finite differences on the scalar
//! objective `L = gᵀβ`, replaying solves with the λ frozen in the context
//! so both sides differentiate the same function.

use crate::error::Error;
use crate::fit::{solve_weighted_ls, solve_weighted_ls_with, Damping, FitContext};
use crate::points::WeightedPointSet;
use crate::scalar::{c, Real};
use crate::Result;

/// Gradient of the downstream loss with respect to the fitted coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct UpstreamGrad<T = f64> {
    g: Vec<T>,
}

impl<T: Real> UpstreamGrad<T> {
    pub fn new(g: Vec<T>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::invalid_config("upstream gradient must be non-empty"));
        }
        if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid_config(format!("non-finite upstream gradient: {bad}")));
        }
        Ok(UpstreamGrad { g })
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }
}

/// Per-point gradients of the downstream loss with respect to the fit inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FitGradients<T = f64> {
    pub d_w: Vec<T>,
    pub d_y: Vec<T>,
    pub d_x: Vec<T>,
}

/// Backpropagates an upstream coefficient gradient through the fit.
pub fn backward_fit<T: Real>(
    ctx: &FitContext<T>,
    upstream: &UpstreamGrad<T>,
) -> Result<FitGradients<T>> {
    let n = ctx.n();
    if upstream.g().len() != n {
        return Err(Error::LengthMismatch { left: upstream.g().len(), right: n });
    }
    let s = ctx.solve_damped_normal(upstream.g())?;
    let beta = ctx.beta().coeffs();

    let m = ctx.m();
    let mut d_w = Vec::with_capacity(m);
    let mut d_y = Vec::with_capacity(m);
    let mut d_x = Vec::with_capacity(m);
    let two = c::<T>(2.0);

    for i in 0..m {
        let v = ctx.row(i);
        let w = ctx.weights()[i];
        let r = ctx.residuals()[i];

        // sᵀv, sᵀv′ and βᵀv′, using v′_j = j·v_{j−1}.
        let mut sv = T::zero();
        let mut svp = T::zero();
        let mut bvp = T::zero();
        for j in 0..n {
            sv += s[j] * v[j];
            if j > 0 {
                let jt = T::from_usize(j).expect("small index");
                svp += s[j] * jt * v[j - 1];
                bvp += beta[j] * jt * v[j - 1];
            }
        }

        let w2 = w * w;
        d_w.push(two * w * sv * r);
        d_y.push(w2 * sv);
        d_x.push(w2 * (svp * r - sv * bvp));
    }

    Ok(FitGradients { d_w, d_y, d_x })
}

/// Which input family a gradient-check entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradVar {
    Weight,
    Y,
    X,
}

/// Finite-difference settings. Central differences with per-variable step
/// `h = step · max(1, |θ|)`.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig<T = f64> {
    pub step: T,
}

impl<T: Real> Default for GradCheckConfig<T> {
    fn default() -> Self {
        GradCheckConfig { step: c(1e-5) }
    }
}

/// One compared derivative.
#[derive(Debug, Clone)]
pub struct GradCheckEntry<T = f64> {
    pub var: GradVar,
    pub index: usize,
    pub analytic: T,
    pub numeric: T,
    /// |analytic − numeric| / max(1e−12, |numeric|)
    pub rel_error: T,
}

/// All per-variable comparisons of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport<T = f64> {
    pub entries: Vec<GradCheckEntry<T>>,
}

impl<T: Real> GradCheckReport<T> {
    pub fn max_rel_error(&self) -> T {
        self.entries
            .iter()
            .map(|e| e.rel_error)
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn worst(&self) -> Option<&GradCheckEntry<T>> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_error.partial_cmp(&b.rel_error).expect("finite"))
    }

    /// True when every entry is within `rel_tol` relative error or within
    /// `abs_floor` absolutely (tiny gradients drown in FD noise otherwise).
    pub fn all_within(&self, rel_tol: T, abs_floor: T) -> bool {
        self.entries
            .iter()
            .all(|e| (e.analytic - e.numeric).abs() <= abs_floor || e.rel_error <= rel_tol)
    }
}

/// Compares [`backward_fit`] against central finite differences of the
/// scalar objective `L(θ) = gᵀ·β(θ)` for every weight, y and x.
///
/// The base fit uses the default damping; every perturbed solve replays
/// with that λ fixed so the differentiated function matches the analytic
/// assumption (λ constant). Weight probes may momentarily step below zero;
/// the objective only sees w², so the value is well-defined there.
pub fn check_gradients<T: Real>(
    points: &WeightedPointSet<T>,
    n: usize,
    upstream: &UpstreamGrad<T>,
    cfg: GradCheckConfig<T>,
) -> Result<GradCheckReport<T>> {
    if !cfg.step.is_finite() || cfg.step <= T::zero() {
        return Err(Error::invalid_config(format!("fd step must be > 0, got {}", cfg.step)));
    }
    let (_, ctx) = solve_weighted_ls(points, n)?;
    let analytic = backward_fit(&ctx, upstream)?;
    let lambda = ctx.lambda();

    let objective = |xs: &[T], ys: &[T], ws: &[T]| -> Result<T> {
        let probe = WeightedPointSet::new_unchecked(xs.to_vec(), ys.to_vec(), ws.to_vec());
        let (beta, _) = solve_weighted_ls_with(&probe, n, Damping::Fixed(lambda))?;
        let mut l = T::zero();
        for (g, b) in upstream.g().iter().zip(beta.coeffs()) {
            l += *g * *b;
        }
        Ok(l)
    };

    let m = points.len();
    let mut entries = Vec::with_capacity(3 * m);
    let rel_floor = c::<T>(1e-12);
    let families: [(GradVar, &[T], &[T]); 3] = [
        (GradVar::Weight, points.ws(), &analytic.d_w),
        (GradVar::Y, points.ys(), &analytic.d_y),
        (GradVar::X, points.xs(), &analytic.d_x),
    ];

    for (var, values, grads) in families {
        for i in 0..m {
            let theta = values[i];
            let h = cfg.step * T::one().max(theta.abs());
            let mut xs = points.xs().to_vec();
            let mut ys = points.ys().to_vec();
            let mut ws = points.ws().to_vec();
            let slot: &mut T = match var {
                GradVar::Weight => &mut ws[i],
                GradVar::Y => &mut ys[i],
                GradVar::X => &mut xs[i],
            };
            *slot = theta + h;
            let plus = objective(&xs, &ys, &ws)?;
            let slot: &mut T = match var {
                GradVar::Weight => &mut ws[i],
                GradVar::Y => &mut ys[i],
                GradVar::X => &mut xs[i],
            };
            *slot = theta - h;
            let minus = objective(&xs, &ys, &ws)?;

            let numeric = (plus - minus) / (c::<T>(2.0) * h);
            let analytic_v = grads[i];
            let rel_error = (analytic_v - numeric).abs() / rel_floor.max(numeric.abs());
            entries.push(GradCheckEntry { var, index: i, analytic: analytic_v, numeric, rel_error });
        }
    }

    Ok(GradCheckReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upstream(g: &[f64]) -> UpstreamGrad {
        UpstreamGrad::new(g.to_vec()).unwrap()
    }

    #[test]
    fn interpolating_line_has_hand_computable_gradients() {
        // Two unit-weight points (0, y0), (1, y1): the fit interpolates, so
        // β = [y0, y1 − y0] and the derivative matrix w.r.t. y is known in
        // closed form; residuals vanish, so weight gradients are zero.
        let (y0, y1) = (0.3, -0.4);
        let points = WeightedPointSet::unweighted(vec![0.0, 1.0], vec![y0, y1]).unwrap();
        let (beta, ctx) = solve_weighted_ls(&points, 2).unwrap();
        let g = [0.7, -1.1];
        let grads = backward_fit(&ctx, &upstream(&g)).unwrap();

        // ∂L/∂y = [g0 − g1, g1]
        assert!((grads.d_y[0] - (g[0] - g[1])).abs() < 1e-8);
        assert!((grads.d_y[1] - g[1]).abs() < 1e-8);
        // ∂L/∂x0 = β1·(g1 − g0), ∂L/∂x1 = −β1·g1 (differentiate the
        // interpolation formulas directly).
        let slope = beta.coeffs()[1];
        assert!((grads.d_x[0] - slope * (g[1] - g[0])).abs() < 1e-7);
        assert!((grads.d_x[1] - (-slope * g[1])).abs() < 1e-7);
        // exact fit ⇒ zero residuals ⇒ zero weight gradients
        assert!(grads.d_w[0].abs() < 1e-9);
        assert!(grads.d_w[1].abs() < 1e-9);
    }

    #[test]
    fn finite_differences_agree_on_a_generic_instance() {
        let points = WeightedPointSet::new(
            vec![0.05, 0.22, 0.41, 0.58, 0.77, 0.96],
            vec![0.31, -0.12, 0.44, 0.25, -0.38, 0.52],
            vec![1.3, 0.4, 0.9, 1.1, 0.6, 0.8],
        )
        .unwrap();
        let up = upstream(&[0.8, -0.5, 0.3]);
        let report = check_gradients(&points, 3, &up, GradCheckConfig::default()).unwrap();
        assert_eq!(report.entries.len(), 18);
        assert!(
            report.all_within(1e-6, 1e-10),
            "worst entry: {:?}",
            report.worst()
        );
    }

    #[test]
    fn zero_weight_point_gets_zero_coordinate_gradients() {
        let points = WeightedPointSet::new(
            vec![0.0, 0.5, 1.0, 0.25],
            vec![0.1, 0.4, 0.9, 5.0],
            vec![1.0, 1.0, 1.0, 0.0],
        )
        .unwrap();
        let (_, ctx) = solve_weighted_ls(&points, 2).unwrap();
        let grads = backward_fit(&ctx, &upstream(&[1.0, 1.0])).unwrap();
        assert_eq!(grads.d_y[3], 0.0);
        assert_eq!(grads.d_x[3], 0.0);
        // moving the weight itself does matter
        let report =
            check_gradients(&points, 2, &upstream(&[1.0, 1.0]), GradCheckConfig::default())
                .unwrap();
        assert!(report.all_within(1e-6, 1e-10), "worst: {:?}", report.worst());
    }

    #[test]
    fn degenerate_instance_is_reported() {
        let points = WeightedPointSet::unweighted(vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
        let err = check_gradients(&points, 2, &upstream(&[1.0, 0.0]), GradCheckConfig::default())
            .unwrap_err();
        assert_eq!(err, Error::DegenerateSystem { n: 2 });
    }

    #[test]
    fn upstream_length_is_validated() {
        let (_, ctx) = solve_weighted_ls(
            &WeightedPointSet::unweighted(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap(),
            2,
        )
        .unwrap();
        let err = backward_fit(&ctx, &upstream(&[1.0, 0.0, 0.0])).unwrap_err();
        assert_eq!(err, Error::LengthMismatch { left: 3, right: 2 });
    }
}
