//! Seeded randomized sweeps: Cholesky route vs dense-elimination oracle,
//! and analytic gradients vs finite differences.

use curvefit::oracle::dense_weighted_normal_solve;
use curvefit::{
    check_gradients, solve_weighted_ls, GradCheckConfig, UpstreamGrad, WeightedPointSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random fit instance with a jittered x-grid over [−1, 1] (bounded
/// condition number by construction).
fn random_instance(seed: u64, max_m: usize) -> (WeightedPointSet<f64>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5usize);
    let m = rng.gen_range((n + 2).max(4)..=max_m);
    let xs: Vec<f64> = (0..m)
        .map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / m as f64 + rng.gen_range(-0.6..0.6) / m as f64)
        .collect();
    let ys: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let ws: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.5)).collect();
    (WeightedPointSet::new(xs, ys, ws).unwrap(), n)
}

#[test]
fn solver_agrees_with_dense_oracle() {
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let (points, n) = random_instance(seed, 50);
        let (beta, ctx) = solve_weighted_ls(&points, n).unwrap();
        let oracle = dense_weighted_normal_solve(&points, n, ctx.lambda()).unwrap();
        let scale = oracle.iter().fold(1e-12f64, |a, b| a.max(b.abs()));
        for (b, o) in beta.coeffs().iter().zip(&oracle) {
            worst = worst.max((b - o).abs() / scale);
        }
    }
    assert!(worst <= 1e-8, "worst relative disagreement {worst}");
}

#[test]
fn oracle_without_damping_agrees_on_well_conditioned_instances() {
    // The λ the solver injects shifts β by about λ/μ_min; on these
    // instances that stays orders of magnitude below the tolerance.
    for seed in 1000..1050 {
        let (points, n) = random_instance(seed, 20);
        let (beta, _) = solve_weighted_ls(&points, n).unwrap();
        let oracle = dense_weighted_normal_solve(&points, n, 0.0).unwrap();
        let scale = oracle.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for (b, o) in beta.coeffs().iter().zip(&oracle) {
            assert!((b - o).abs() / scale <= 1e-7, "seed {seed}: {b} vs {o}");
        }
    }
}

#[test]
fn gradients_pass_fd_sweep() {
    for seed in 500..560 {
        let (points, n) = random_instance(seed, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upstream = UpstreamGrad::new(g).unwrap();
        let report =
            check_gradients(&points, n, &upstream, GradCheckConfig::default()).unwrap();
        assert!(
            report.all_within(1e-5, 1e-9),
            "seed {seed}: worst {:?}",
            report.worst()
        );
    }
}
