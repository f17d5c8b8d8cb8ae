//! Losses between a fitted curve and a target curve on a horizon `[0, t]`.
//!
//! The geometric losses integrate the squared vertical gap between the two
//! curves. With `Δ(x) = pred(x) − target(x)` and `Δβ = β_pred − β_target`:
//!
//! ```text
//! L = ∫₀ᵗ Δ(x)² dx
//! ```
//!
//! which expands in closed form for lines (`Δ = Δβ₀ + Δβ₁x`):
//!
//! ```text
//! L = Δβ₀²·t + Δβ₁Δβ₀·t² + Δβ₁²·t³/3
//! ```
//!
//! and parabolas (`Δ = Δβ₀ + Δβ₁x + Δβ₂x²`):
//!
//! ```text
//! L = Δβ₀²·t + Δβ₀Δβ₁·t² + (Δβ₁² + 2Δβ₂Δβ₀)·t³/3 + Δβ₁Δβ₂·t⁴/2 + Δβ₂²·t⁵/5
//! ```
//!
//! Both come with their coefficient gradients, so they can feed straight
//! into [`crate::backward_fit`]. [`geometric_loss_numeric`] evaluates the
//! same integral by composite Simpson quadrature for any equal basis size —
//! it is the verification oracle for the closed forms, and the only route
//! for degrees the closed forms don't cover. [`area_error`] is the
//! evaluation metric: mean absolute gap `(1/t)·∫₀ᵗ|Δ(x)|dx`.

use crate::curve::CurveParams;
use crate::error::Error;
use crate::grad::UpstreamGrad;
use crate::scalar::{c, cu, Real};
use crate::Result;

/// Horizon and quadrature settings shared by the loss functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig<T = f64> {
    /// Upper integration bound; the curves are compared over `[0, t]`.
    pub t: T,
    /// Segment count for Simpson quadrature. Even, ≥ 2.
    pub quad_segments: usize,
}

impl<T: Real> Default for LossConfig<T> {
    fn default() -> Self {
        LossConfig { t: T::one(), quad_segments: 1000 }
    }
}

impl<T: Real> LossConfig<T> {
    pub fn with_t(t: T) -> Self {
        LossConfig { t, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || self.t <= T::zero() {
            return Err(Error::invalid_config(format!("horizon t must be > 0, got {}", self.t)));
        }
        if self.quad_segments < 2 || !self.quad_segments.is_multiple_of(2) {
            return Err(Error::invalid_config(format!(
                "quad_segments must be even and ≥ 2, got {}",
                self.quad_segments
            )));
        }
        Ok(())
    }
}

fn delta<T: Real>(pred: &CurveParams<T>, target: &CurveParams<T>) -> Result<Vec<T>> {
    if pred.n() != target.n() {
        return Err(Error::LengthMismatch { left: pred.n(), right: target.n() });
    }
    Ok(pred
        .coeffs()
        .iter()
        .zip(target.coeffs())
        .map(|(p, t)| *p - *t)
        .collect())
}

/// Mean squared coefficient distance `(1/n)·Σ(βᵢ − β̂ᵢ)²` with gradient.
pub fn l2_param_loss<T: Real>(
    pred: &CurveParams<T>,
    target: &CurveParams<T>,
) -> Result<(T, UpstreamGrad<T>)> {
    let d = delta(pred, target)?;
    let n = cu::<T>(d.len());
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(d.len());
    for di in &d {
        loss += *di * *di / n;
        grad.push(c::<T>(2.0) * *di / n);
    }
    Ok((loss, UpstreamGrad::new(grad)?))
}

/// Closed-form squared-area loss between two lines over `[0, t]`.
pub fn geometric_loss_line<T: Real>(
    pred: &CurveParams<T>,
    target: &CurveParams<T>,
    cfg: &LossConfig<T>,
) -> Result<(T, UpstreamGrad<T>)> {
    cfg.validate()?;
    let d = delta(pred, target)?;
    if d.len() != 2 {
        return Err(Error::invalid_config(format!(
            "line loss needs n = 2 coefficients, got {}",
            d.len()
        )));
    }
    let t = cfg.t;
    let (t2, t3) = (t * t, t * t * t);
    let two = c::<T>(2.0);
    let third = c::<T>(1.0 / 3.0);

    let loss = d[0] * d[0] * t + d[1] * d[0] * t2 + d[1] * d[1] * t3 * third;
    let g = vec![
        two * d[0] * t + d[1] * t2,
        d[0] * t2 + two * d[1] * t3 * third,
    ];
    Ok((loss, UpstreamGrad::new(g)?))
}

/// Closed-form squared-area loss between two parabolas over `[0, t]`.
pub fn geometric_loss_parabola<T: Real>(
    pred: &CurveParams<T>,
    target: &CurveParams<T>,
    cfg: &LossConfig<T>,
) -> Result<(T, UpstreamGrad<T>)> {
    cfg.validate()?;
    let d = delta(pred, target)?;
    if d.len() != 3 {
        return Err(Error::invalid_config(format!(
            "parabola loss needs n = 3 coefficients, got {}",
            d.len()
        )));
    }
    let t = cfg.t;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let two = c::<T>(2.0);
    let third = c::<T>(1.0 / 3.0);
    let half = c::<T>(0.5);
    let fifth = c::<T>(0.2);

    let loss = d[0] * d[0] * t
        + d[0] * d[1] * t2
        + (d[1] * d[1] + two * d[2] * d[0]) * t3 * third
        + d[1] * d[2] * t4 * half
        + d[2] * d[2] * t5 * fifth;
    let g = vec![
        two * d[0] * t + d[1] * t2 + two * d[2] * t3 * third,
        d[0] * t2 + two * d[1] * t3 * third + d[2] * t4 * half,
        two * d[0] * t3 * third + d[1] * t4 * half + two * d[2] * t5 * fifth,
    ];
    Ok((loss, UpstreamGrad::new(g)?))
}

/// Composite Simpson rule over `[0, t]` with `segments` panels.
fn simpson<T: Real, F: Fn(T) -> T>(f: F, t: T, segments: usize) -> T {
    let n = segments;
    let h = t / cu::<T>(n);
    let mut sum = f(T::zero()) + f(t);
    let four = c::<T>(4.0);
    let two = c::<T>(2.0);
    for i in 1..n {
        let x = h * cu::<T>(i);
        sum += if i % 2 == 1 { four * f(x) } else { two * f(x) };
    }
    sum * h / c::<T>(3.0)
}

/// Squared-area loss by quadrature, for any pair of equal basis sizes.
/// Verification route for the closed forms; no gradient.
pub fn geometric_loss_numeric<T: Real>(
    pred: &CurveParams<T>,
    target: &CurveParams<T>,
    cfg: &LossConfig<T>,
) -> Result<T> {
    cfg.validate()?;
    delta(pred, target)?; // validates equal basis sizes
    Ok(simpson(
        |x| {
            let d = pred.evaluate(x) - target.evaluate(x);
            d * d
        },
        cfg.t,
        cfg.quad_segments,
    ))
}

/// Mean absolute gap `(1/t)·∫₀ᵗ |pred(x) − target(x)| dx` by quadrature.
pub fn area_error<T: Real>(
    pred: &CurveParams<T>,
    target: &CurveParams<T>,
    cfg: &LossConfig<T>,
) -> Result<T> {
    cfg.validate()?;
    delta(pred, target)?;
    let integral = simpson(
        |x| (pred.evaluate(x) - target.evaluate(x)).abs(),
        cfg.t,
        cfg.quad_segments,
    );
    Ok(integral / cfg.t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(coeffs: &[f64]) -> CurveParams {
        CurveParams::new(coeffs.to_vec()).unwrap()
    }

    #[test]
    fn line_loss_matches_hand_expansion() {
        // Δβ = (0.5, −0.3), t = 1: 0.25 − 0.15 + 0.09/3 = 0.13.
        let target = curve(&[0.1, 0.2]);
        let pred = curve(&[0.6, -0.1]);
        let (loss, _) = geometric_loss_line(&pred, &target, &LossConfig::default()).unwrap();
        assert!((loss - 0.13).abs() < 1e-15, "{loss}");
    }

    #[test]
    fn parabola_loss_pure_curvature_term() {
        // Δβ = (0, 0, 1), t = 1: ∫x⁴ = 1/5.
        let (loss, _) = geometric_loss_parabola(
            &curve(&[0.0, 0.0, 1.0]),
            &curve(&[0.0, 0.0, 0.0]),
            &LossConfig::default(),
        )
        .unwrap();
        assert!((loss - 0.2).abs() < 1e-15, "{loss}");
    }

    #[test]
    fn identical_curves_have_zero_loss_and_gradient() {
        let a = curve(&[0.4, -0.2, 0.7]);
        let (loss, g) = geometric_loss_parabola(&a, &a, &LossConfig::default()).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.g(), &[0.0, 0.0, 0.0]);
        let (l2, g2) = l2_param_loss(&a, &a).unwrap();
        assert_eq!(l2, 0.0);
        assert_eq!(g2.g(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn l2_param_loss_averages_squared_deltas() {
        let (loss, g) = l2_param_loss(&curve(&[1.0, 3.0]), &curve(&[0.0, 1.0])).unwrap();
        assert!((loss - (1.0 + 4.0) / 2.0).abs() < 1e-15);
        assert_eq!(g.g(), &[1.0, 2.0]);
    }

    #[test]
    fn closed_forms_match_simpson() {
        let cases = [
            (vec![0.5, -0.3], vec![0.0, 0.0], 1.0),
            (vec![1.2, 0.7], vec![-0.4, 1.9], 2.5),
            (vec![0.05, -0.02], vec![0.01, 0.0], 0.3),
        ];
        for (p, t, horizon) in cases {
            let cfg = LossConfig { t: horizon, quad_segments: 1000 };
            let (closed, _) = geometric_loss_line(&curve(&p), &curve(&t), &cfg).unwrap();
            let numeric = geometric_loss_numeric(&curve(&p), &curve(&t), &cfg).unwrap();
            assert!((closed - numeric).abs() <= 1e-9 * numeric.abs().max(1e-12), "{closed} vs {numeric}");
        }
        let cases3 = [
            (vec![0.5, -0.3, 0.8], vec![0.0, 0.0, 0.0], 1.0),
            (vec![-1.0, 0.25, -0.6], vec![0.3, -0.7, 1.4], 1.7),
        ];
        for (p, t, horizon) in cases3 {
            let cfg = LossConfig { t: horizon, quad_segments: 1000 };
            let (closed, _) = geometric_loss_parabola(&curve(&p), &curve(&t), &cfg).unwrap();
            let numeric = geometric_loss_numeric(&curve(&p), &curve(&t), &cfg).unwrap();
            assert!((closed - numeric).abs() <= 1e-9 * numeric.abs().max(1e-12), "{closed} vs {numeric}");
        }
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let target2 = curve(&[0.3, -0.5]);
        let pred2 = curve(&[0.9, 0.4]);
        let target3 = curve(&[0.3, -0.5, 0.2]);
        let pred3 = curve(&[-0.1, 0.8, -0.6]);
        let cfg = LossConfig { t: 1.4, quad_segments: 1000 };

        let fd = |f: &dyn Fn(&CurveParams) -> f64, base: &CurveParams, j: usize| {
            let h = 1e-6;
            let mut up = base.coeffs().to_vec();
            let mut dn = up.clone();
            up[j] += h;
            dn[j] -= h;
            (f(&curve(&up)) - f(&curve(&dn))) / (2.0 * h)
        };

        let (_, g) = geometric_loss_line(&pred2, &target2, &cfg).unwrap();
        for j in 0..2 {
            let num = fd(&|p| geometric_loss_line(p, &target2, &cfg).unwrap().0, &pred2, j);
            assert!((g.g()[j] - num).abs() <= 1e-7 * num.abs().max(1.0), "{:?} vs {num}", g.g());
        }
        let (_, g) = geometric_loss_parabola(&pred3, &target3, &cfg).unwrap();
        for j in 0..3 {
            let num = fd(&|p| geometric_loss_parabola(p, &target3, &cfg).unwrap().0, &pred3, j);
            assert!((g.g()[j] - num).abs() <= 1e-7 * num.abs().max(1.0), "{:?} vs {num}", g.g());
        }
    }

    #[test]
    fn area_error_of_linear_gap_is_split_integral() {
        // pred − target = x − 0.5 on [0, 1]: two triangles, area 0.25. The
        // kink sits on a panel-pair boundary, so Simpson is exact.
        let target = curve(&[0.2, 0.3]);
        let pred = curve(&[-0.3, 1.3]);
        let err = area_error(&pred, &target, &LossConfig::default()).unwrap();
        assert!((err - 0.25).abs() < 1e-12, "{err}");
    }

    #[test]
    fn area_error_normalizes_by_horizon() {
        // constant gap 0.4 over any horizon ⇒ mean gap 0.4
        let target = curve(&[0.0, 0.0]);
        let pred = curve(&[0.4, 0.0]);
        for t in [0.5, 1.0, 2.0] {
            let cfg = LossConfig { t, quad_segments: 100 };
            let err = area_error(&pred, &target, &cfg).unwrap();
            assert!((err - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let a = curve(&[0.0, 0.0]);
        for cfg in [
            LossConfig { t: 0.0, quad_segments: 1000 },
            LossConfig { t: -1.0, quad_segments: 1000 },
            LossConfig { t: f64::NAN, quad_segments: 1000 },
            LossConfig { t: 1.0, quad_segments: 0 },
            LossConfig { t: 1.0, quad_segments: 7 },
        ] {
            assert!(geometric_loss_line(&a, &a, &cfg).is_err(), "{cfg:?}");
            assert!(geometric_loss_numeric(&a, &a, &cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn basis_size_mismatches_are_rejected() {
        let line = curve(&[0.0, 1.0]);
        let para = curve(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            geometric_loss_line(&line, &para, &LossConfig::default()),
            Err(Error::LengthMismatch { left: 2, right: 3 })
        ));
        assert!(geometric_loss_line(&para, &para, &LossConfig::default()).is_err());
        assert!(geometric_loss_parabola(&line, &line, &LossConfig::default()).is_err());
        assert!(geometric_loss_numeric(&line, &para, &LossConfig::default()).is_err());
    }
}
