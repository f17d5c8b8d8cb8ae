//! Randomized verification sweeps over the numerical core.
//!
//! Each sweep generates seeded random instances, checks one contract —
//! solver vs. an independent dense oracle, analytic vs. numeric gradients,
//! closed-form vs. quadrature losses, homography round-trips — and reports
//! how many cases failed the supplied tolerance. The `check` CLI
//! subcommand runs them with default counts; the acceptance tests run them
//! with pinned ones. Both share this code so the instance distributions
//! can't drift apart.

// Failure counting uses `!(dev <= tol)` throughout so a NaN deviation
// counts as a failure instead of slipping past a `dev > tol` test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use curvefit::oracle::dense_weighted_normal_solve;
use curvefit::{
    backward_transform, check_gradients, geometric_loss_line, geometric_loss_numeric,
    geometric_loss_parabola, solve_weighted_ls, transform_points, CurveParams, GradCheckConfig,
    Homography, LossConfig, UpstreamGrad, WeightedPointSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::Result;

/// Outcome of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub label: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest deviation observed, in the sweep's own metric.
    pub max_deviation: f64,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl std::fmt::Display for SweepOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} cases, {} failures, max deviation {:.3e}",
            self.label, self.cases, self.failures, self.max_deviation
        )
    }
}

/// Random weighted fit instance: jittered abscissa grid on [−1, 1] so no
/// two x collide, moderate weights, basis size 1..=5, up to 50 points.
pub fn random_fit_instance(seed: u64) -> (WeightedPointSet, usize) {
    random_instance(seed, 5, 50, 1.5)
}

/// Tamer instance family for finite-difference comparisons: basis size
/// 1..=4, at most 30 points, weights in [0.1, 1]. Quartic bases and large
/// weights push FD truncation error past the comparison tolerance even
/// when the analytic gradients are exact, so the FD sweeps stay here.
pub fn random_grad_instance(seed: u64) -> (WeightedPointSet, usize) {
    random_instance(seed, 4, 30, 1.0)
}

fn random_instance(seed: u64, n_max: usize, m_max: usize, w_max: f64) -> (WeightedPointSet, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=n_max);
    let m = rng.gen_range((n + 2).max(4)..=m_max);
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for i in 0..m {
        let grid = -1.0 + 2.0 * i as f64 / (m - 1) as f64;
        xs.push(grid + rng.gen_range(-0.4..=0.4) / m as f64);
        ys.push(rng.gen_range(-2.0..=2.0));
        ws.push(rng.gen_range(0.1..=w_max));
    }
    (WeightedPointSet::new(xs, ys, ws).expect("valid by construction"), n)
}

/// Solver vs. dense Gaussian-elimination oracle on the same damped system.
/// Deviation metric: max per-coefficient relative error, floored at
/// magnitude 1 so near-zero coefficients compare absolutely.
pub fn solver_oracle_sweep(cases: usize, seed0: u64, tol: f64) -> Result<SweepOutcome> {
    let mut failures = 0;
    let mut max_dev: f64 = 0.0;
    for i in 0..cases {
        let (points, n) = random_fit_instance(seed0 + i as u64);
        let (beta, ctx) = solve_weighted_ls(&points, n).map_err(Error::Fit)?;
        let reference =
            dense_weighted_normal_solve(&points, n, ctx.lambda()).map_err(Error::Fit)?;
        let dev = beta
            .coeffs()
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        max_dev = max_dev.max(dev);
        if !(dev <= tol) {
            failures += 1;
        }
    }
    Ok(SweepOutcome { label: "solver-vs-oracle", cases, failures, max_deviation: max_dev })
}

/// Analytic fit gradients vs. central finite differences, all variable
/// families. Deviation metric: worst relative error across the report.
pub fn fit_gradient_sweep(
    cases: usize,
    seed0: u64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<SweepOutcome> {
    let mut failures = 0;
    let mut max_dev: f64 = 0.0;
    for i in 0..cases {
        let seed = seed0 + i as u64;
        let (points, n) = random_grad_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let upstream = UpstreamGrad::new(g).map_err(Error::Fit)?;
        let report = check_gradients(&points, n, &upstream, GradCheckConfig::default())
            .map_err(Error::Fit)?;
        max_dev = max_dev.max(report.max_rel_error());
        if !report.all_within(rel_tol, abs_floor) {
            failures += 1;
        }
    }
    Ok(SweepOutcome { label: "fit-gradients-vs-fd", cases, failures, max_deviation: max_dev })
}

fn random_curve(rng: &mut ChaCha8Rng, n: usize) -> CurveParams {
    CurveParams::new((0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect())
        .expect("valid by construction")
}

/// Closed-form line/parabola losses vs. Simpson quadrature. Deviation
/// metric: |closed − numeric| / max(1, |numeric|).
pub fn loss_closed_form_sweep(cases: usize, seed0: u64, tol: f64) -> Result<SweepOutcome> {
    let mut failures = 0;
    let mut max_dev: f64 = 0.0;
    for i in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i as u64);
        let n = if i % 2 == 0 { 2 } else { 3 };
        let pred = random_curve(&mut rng, n);
        let target = random_curve(&mut rng, n);
        let cfg = LossConfig { t: rng.gen_range(0.3..=2.5), quad_segments: 1000 };
        let (closed, _) = match n {
            2 => geometric_loss_line(&pred, &target, &cfg).map_err(Error::Fit)?,
            _ => geometric_loss_parabola(&pred, &target, &cfg).map_err(Error::Fit)?,
        };
        let numeric = geometric_loss_numeric(&pred, &target, &cfg).map_err(Error::Fit)?;
        let dev = (closed - numeric).abs() / numeric.abs().max(1.0);
        max_dev = max_dev.max(dev);
        if !(dev <= tol) {
            failures += 1;
        }
    }
    Ok(SweepOutcome { label: "loss-closed-vs-simpson", cases, failures, max_deviation: max_dev })
}

/// Closed-form loss gradients vs. central finite differences on the
/// coefficients. Deviation metric: |analytic − numeric| / max(1, |numeric|).
pub fn loss_gradient_sweep(cases: usize, seed0: u64, tol: f64) -> Result<SweepOutcome> {
    let mut failures = 0;
    let mut max_dev: f64 = 0.0;
    let h = 1e-6;
    for i in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i as u64);
        let n = if i % 2 == 0 { 2 } else { 3 };
        let pred = random_curve(&mut rng, n);
        let target = random_curve(&mut rng, n);
        let cfg = LossConfig { t: rng.gen_range(0.3..=2.5), quad_segments: 2 };
        let eval = |coeffs: Vec<f64>| -> Result<f64> {
            let p = CurveParams::new(coeffs).map_err(Error::Fit)?;
            let (l, _) = match n {
                2 => geometric_loss_line(&p, &target, &cfg).map_err(Error::Fit)?,
                _ => geometric_loss_parabola(&p, &target, &cfg).map_err(Error::Fit)?,
            };
            Ok(l)
        };
        let (_, grad) = match n {
            2 => geometric_loss_line(&pred, &target, &cfg).map_err(Error::Fit)?,
            _ => geometric_loss_parabola(&pred, &target, &cfg).map_err(Error::Fit)?,
        };
        for j in 0..n {
            let mut up = pred.coeffs().to_vec();
            let mut dn = up.clone();
            up[j] += h;
            dn[j] -= h;
            let numeric = (eval(up)? - eval(dn)?) / (2.0 * h);
            let dev = (grad.g()[j] - numeric).abs() / numeric.abs().max(1.0);
            max_dev = max_dev.max(dev);
            if !(dev <= tol) {
                failures += 1;
            }
        }
    }
    Ok(SweepOutcome { label: "loss-gradients-vs-fd", cases, failures, max_deviation: max_dev })
}

/// Random homography with a bounded projective row, so every point of the
/// unit square keeps a denominator ≥ 0.4, plus a determinant floor.
fn random_homography(rng: &mut ChaCha8Rng) -> Homography {
    loop {
        let mut m = [0.0f64; 9];
        for v in m.iter_mut().take(6) {
            *v = rng.gen_range(-1.5..=1.5);
        }
        m[6] = rng.gen_range(-0.3..=0.3);
        m[7] = rng.gen_range(-0.3..=0.3);
        m[8] = 1.0;
        if let Ok(h) = Homography::new(m) {
            if h.det().abs() > 0.05 {
                return h;
            }
        }
    }
}

fn random_unit_points(rng: &mut ChaCha8Rng, m: usize) -> WeightedPointSet {
    let xs = (0..m).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let ys = (0..m).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let ws = (0..m).map(|_| rng.gen_range(0.0..=2.0)).collect();
    WeightedPointSet::new(xs, ys, ws).expect("valid by construction")
}

/// Forward-then-inverse round trips and composition consistency on random
/// point sets. Deviation metric: max coordinate error per case.
pub fn homography_roundtrip_sweep(cases: usize, seed0: u64, tol: f64) -> Result<SweepOutcome> {
    let mut failures = 0;
    let mut max_dev: f64 = 0.0;
    for i in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i as u64);
        let h = random_homography(&mut rng);
        let points = random_unit_points(&mut rng, 8);
        let mut dev: f64 = 0.0;

        let fwd = transform_points(&h, &points).map_err(Error::Fit)?;
        let back = transform_points(&h.inverse().map_err(Error::Fit)?, &fwd).map_err(Error::Fit)?;
        for j in 0..points.len() {
            dev = dev.max((back.xs()[j] - points.xs()[j]).abs());
            dev = dev.max((back.ys()[j] - points.ys()[j]).abs());
            // weights must pass through untouched
            if back.ws()[j] != points.ws()[j] {
                dev = f64::INFINITY;
            }
        }

        // composed map vs. sequential application; keep the second map mild
        // so the composition stays well-conditioned on these points
        let g = Homography::new([1.1, 0.1, -0.05, -0.08, 0.95, 0.1, 0.02, -0.01, 1.0])
            .expect("fixed matrix is valid");
        let seq = transform_points(&g, &fwd).map_err(Error::Fit)?;
        let gh = g.compose(&h).map_err(Error::Fit)?;
        let composed = transform_points(&gh, &points).map_err(Error::Fit)?;
        for j in 0..points.len() {
            dev = dev.max((seq.xs()[j] - composed.xs()[j]).abs());
            dev = dev.max((seq.ys()[j] - composed.ys()[j]).abs());
        }

        max_dev = max_dev.max(dev);
        if !(dev <= tol) {
            failures += 1;
        }
    }
    Ok(SweepOutcome { label: "homography-roundtrip", cases, failures, max_deviation: max_dev })
}

/// Transform backward pass vs. central finite differences on a random
/// linear functional of the outputs. Deviation metric:
/// |analytic − numeric| / max(1, |numeric|).
pub fn homography_gradient_sweep(cases: usize, seed0: u64, tol: f64) -> Result<SweepOutcome> {
    let mut failures = 0;
    let mut max_dev: f64 = 0.0;
    let h_step = 1e-6;
    for i in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i as u64);
        let hom = random_homography(&mut rng);
        let points = random_unit_points(&mut rng, 6);
        let m = points.len();
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let objective = |xs: &[f64], ys: &[f64]| -> Result<f64> {
            let p = WeightedPointSet::new(xs.to_vec(), ys.to_vec(), points.ws().to_vec())
                .map_err(Error::Fit)?;
            let out = transform_points(&hom, &p).map_err(Error::Fit)?;
            Ok((0..m).map(|j| a[j] * out.xs()[j] + b[j] * out.ys()[j]).sum())
        };
        let (d_x, d_y) = backward_transform(&hom, &points, &a, &b).map_err(Error::Fit)?;
        let mut dev: f64 = 0.0;
        for j in 0..m {
            for (coord, analytic) in [(0usize, d_x[j]), (1, d_y[j])] {
                let mut xs = points.xs().to_vec();
                let mut ys = points.ys().to_vec();
                let slot = if coord == 0 { &mut xs[j] } else { &mut ys[j] };
                *slot += h_step;
                let up = objective(&xs, &ys)?;
                *(if coord == 0 { &mut xs[j] } else { &mut ys[j] }) -= 2.0 * h_step;
                let dn = objective(&xs, &ys)?;
                let numeric = (up - dn) / (2.0 * h_step);
                dev = dev.max((analytic - numeric).abs() / numeric.abs().max(1.0));
            }
        }
        max_dev = max_dev.max(dev);
        if !(dev <= tol) {
            failures += 1;
        }
    }
    Ok(SweepOutcome { label: "homography-gradients-vs-fd", cases, failures, max_deviation: max_dev })
}

/// Runs every sweep with moderate counts; the `check` subcommand's engine.
pub fn run_all(cases: usize, seed0: u64) -> Result<Vec<SweepOutcome>> {
    Ok(vec![
        solver_oracle_sweep(cases, seed0, 1e-8)?,
        fit_gradient_sweep(cases, seed0.wrapping_add(10_000), 1e-5, 1e-9)?,
        loss_closed_form_sweep(cases, seed0.wrapping_add(20_000), 1e-9)?,
        loss_gradient_sweep(cases, seed0.wrapping_add(30_000), 1e-7)?,
        homography_roundtrip_sweep(cases, seed0.wrapping_add(40_000), 1e-9)?,
        homography_gradient_sweep(cases, seed0.wrapping_add(50_000), 1e-6)?,
    ])
}
