//! The scene-level differentiable chain.
//!
//! Forward, per curve: generator scores → per-pixel weights → weighted
//! pixel point set (normalized image coordinates) → homography into the
//! ortho frame → weighted parabola fit → closed-form geometric loss
//! against the ground-truth curve.
//!
//! Backward: the loss gradient flows through the fit to the per-pixel
//! weights ([`curvefit::backward_fit`]) and from there into the generator
//! parameters. Pixel coordinates are fixed inputs here, so their gradient
//! path (available via [`curvefit::backward_transform`]) terminates and is
//! not materialized.

use curvefit::{
    geometric_loss_parabola, solve_weighted_ls, transform_points, CurveParams, LossConfig,
    WeightedPointSet,
};

use crate::error::Error;
use crate::generator::WeightGenerator;
use crate::scene::SyntheticScene;
use crate::Result;

/// Basis size of the lane parabolas.
pub const PARABOLA_N: usize = 3;

/// How per-pixel scores become fitting weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `w = s²` — the end-to-end parameterization (differentiable,
    /// non-negative by construction).
    SquaredScore,
    /// `w = σ(s)` — scores read as logits, as produced by cross-entropy
    /// training; used for the two-step baseline's fitting stage.
    SigmoidScore,
}

/// Numerically stable logistic function.
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn weights_from_scores(scores: &[f64], mode: WeightMode) -> Vec<f64> {
    match mode {
        WeightMode::SquaredScore => scores.iter().map(|s| s * s).collect(),
        WeightMode::SigmoidScore => scores.iter().map(|&s| sigmoid(s)).collect(),
    }
}

/// Pixel point set under an explicit weight mode (the generator's own
/// [`WeightGenerator::forward_weights`] is the squared-score special case).
pub fn scene_points(
    gen: &WeightGenerator,
    scene: &SyntheticScene,
    map: usize,
    mode: WeightMode,
) -> Result<(WeightedPointSet, Vec<f64>)> {
    let image = &scene.image;
    let scores = gen.scores(image, map);
    let ws = weights_from_scores(&scores, mode);
    let mut xs = Vec::with_capacity(ws.len());
    let mut ys = Vec::with_capacity(ws.len());
    for r in 0..image.h() {
        for c in 0..image.w() {
            xs.push(image.norm_x(c));
            ys.push(image.norm_y(r));
        }
    }
    let points = WeightedPointSet::new(xs, ys, ws).map_err(Error::Fit)?;
    Ok((points, scores))
}

/// Projects image-frame points into the ortho frame and fits a parabola.
pub fn fit_projected(
    points_img: &WeightedPointSet,
    scene: &SyntheticScene,
) -> Result<curvefit::FitContext> {
    let ortho = transform_points(&scene.homography, points_img).map_err(Error::Fit)?;
    let (_, ctx) = solve_weighted_ls(&ortho, PARABOLA_N).map_err(Error::Fit)?;
    Ok(ctx)
}

/// Loss and parameter gradient of one scene under the end-to-end chain.
#[derive(Debug, Clone)]
pub struct SceneGrad {
    /// Mean loss over the curves that produced a fit; NaN when none did.
    pub loss: f64,
    /// Per-curve losses; `None` marks a degenerate fit.
    pub curve_losses: Vec<Option<f64>>,
    pub fitted: usize,
    pub degenerate: usize,
    /// `∂loss/∂θ`, same layout as [`WeightGenerator::params`].
    pub param_grad: Vec<f64>,
}

/// Runs the full forward/backward chain over every curve of a scene with
/// squared-score weights. Degenerate fits are skipped and counted; any
/// other failure propagates.
pub fn scene_loss_and_grad(
    gen: &WeightGenerator,
    scene: &SyntheticScene,
    loss_cfg: &LossConfig,
) -> Result<SceneGrad> {
    if gen.k() != scene.gt.len() {
        return Err(Error::invalid_config(format!(
            "generator has {} maps but the scene has {} curves",
            gen.k(),
            scene.gt.len()
        )));
    }
    let mut curve_losses = Vec::with_capacity(gen.k());
    let mut staged = Vec::new();
    let mut total = 0.0;
    for map in 0..gen.k() {
        let (points_img, scores) = scene_points(gen, scene, map, WeightMode::SquaredScore)?;
        let ctx = match fit_projected(&points_img, scene) {
            Ok(ctx) => ctx,
            Err(e) if e.is_degenerate_fit() => {
                curve_losses.push(None);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (loss, upstream) =
            geometric_loss_parabola(ctx.beta(), &scene.gt[map], loss_cfg).map_err(Error::Fit)?;
        let grads = curvefit::backward_fit(&ctx, &upstream).map_err(Error::Fit)?;
        total += loss;
        curve_losses.push(Some(loss));
        staged.push((map, scores, grads.d_w));
    }
    let fitted = staged.len();
    let degenerate = gen.k() - fitted;
    let mut param_grad = vec![0.0; gen.params().len()];
    if fitted > 0 {
        let scale = 1.0 / fitted as f64;
        for (map, scores, mut d_w) in staged {
            for d in &mut d_w {
                *d *= scale;
            }
            gen.accumulate_param_grad(&scene.image, map, &scores, &d_w, &mut param_grad);
        }
    }
    let loss = if fitted > 0 { total / fitted as f64 } else { f64::NAN };
    Ok(SceneGrad { loss, curve_losses, fitted, degenerate, param_grad })
}

/// Fit quality of one curve at evaluation time.
#[derive(Debug, Clone)]
pub struct CurveEval {
    /// Fitted coefficients, or `None` when the system was degenerate.
    pub beta: Option<CurveParams>,
    /// Mean absolute lateral gap to the ground truth over the horizon.
    pub error: Option<f64>,
}

/// Fits every curve of a scene under the given weight mode and measures
/// the area error against the ground truth. No gradients.
pub fn evaluate_scene(
    gen: &WeightGenerator,
    scene: &SyntheticScene,
    mode: WeightMode,
    loss_cfg: &LossConfig,
) -> Result<Vec<CurveEval>> {
    if gen.k() != scene.gt.len() {
        return Err(Error::invalid_config(format!(
            "generator has {} maps but the scene has {} curves",
            gen.k(),
            scene.gt.len()
        )));
    }
    let mut out = Vec::with_capacity(gen.k());
    for map in 0..gen.k() {
        let (points_img, _) = scene_points(gen, scene, map, mode)?;
        match fit_projected(&points_img, scene) {
            Ok(ctx) => {
                let err =
                    curvefit::area_error(ctx.beta(), &scene.gt[map], loss_cfg).map_err(Error::Fit)?;
                out.push(CurveEval { beta: Some(ctx.beta().clone()), error: Some(err) });
            }
            Err(e) if e.is_degenerate_fit() => out.push(CurveEval { beta: None, error: None }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Fraction of total pixel weight that lands inside distractor blobs,
/// summed over all maps. Zero when the scene has no distractors or no
/// weight mass at all.
pub fn distractor_weight_fraction(
    gen: &WeightGenerator,
    scene: &SyntheticScene,
    mode: WeightMode,
) -> f64 {
    if scene.distractors.is_empty() {
        return 0.0;
    }
    let image = &scene.image;
    let mut inside = 0.0;
    let mut total = 0.0;
    for map in 0..gen.k() {
        let scores = gen.scores(image, map);
        let ws = weights_from_scores(&scores, mode);
        for r in 0..image.h() {
            for c in 0..image.w() {
                let w = ws[r * image.w() + c];
                total += w;
                let hit = scene.distractors.iter().any(|b| {
                    let (dr, dc) = (r as f64 - b.row, c as f64 - b.col);
                    dr * dr + dc * dc <= b.radius * b.radius
                });
                if hit {
                    inside += w;
                }
            }
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::PARAMS_PER_MAP;
    use crate::scene::{generate_scene, DistractorSpec, SceneConfig};

    fn tiny_cfg() -> SceneConfig {
        SceneConfig {
            height: 16,
            width: 16,
            k: 1,
            noise: 0.0,
            dash: None,
            distractors: None,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn sigmoid_is_stable_and_monotone() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(40.0) > 1.0 - 1e-15);
        assert!(sigmoid(-40.0) < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(1.0) > sigmoid(0.5));
    }

    #[test]
    fn zero_generator_makes_every_fit_degenerate() {
        let scene = generate_scene(1, &tiny_cfg()).unwrap();
        let gen = WeightGenerator::zeros(1);
        let report = scene_loss_and_grad(&gen, &scene, &LossConfig::default()).unwrap();
        assert_eq!(report.fitted, 0);
        assert_eq!(report.degenerate, 1);
        assert_eq!(report.curve_losses, vec![None]);
        assert!(report.loss.is_nan());
        assert!(report.param_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn bias_only_generator_fits_something_finite() {
        let scene = generate_scene(2, &tiny_cfg()).unwrap();
        let mut params = vec![0.0; PARAMS_PER_MAP];
        params[PARAMS_PER_MAP - 1] = 1.0;
        let gen = WeightGenerator::new(1, params).unwrap();
        let report = scene_loss_and_grad(&gen, &scene, &LossConfig::default()).unwrap();
        assert_eq!(report.fitted, 1);
        assert!(report.loss.is_finite() && report.loss >= 0.0);
        assert!(report.param_grad.iter().any(|&g| g != 0.0));
    }

    #[test]
    fn scene_gradient_matches_finite_differences() {
        let scene = generate_scene(3, &tiny_cfg()).unwrap();
        let gen = WeightGenerator::random_init(1, 0.4, 5);
        let cfg = LossConfig::default();
        let report = scene_loss_and_grad(&gen, &scene, &cfg).unwrap();
        assert_eq!(report.fitted, 1);
        let h = 1e-6;
        for p in 0..PARAMS_PER_MAP {
            let mut plus = gen.clone();
            plus.params_mut()[p] += h;
            let mut minus = gen.clone();
            minus.params_mut()[p] -= h;
            let lp = scene_loss_and_grad(&plus, &scene, &cfg).unwrap().loss;
            let lm = scene_loss_and_grad(&minus, &scene, &cfg).unwrap().loss;
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = report.param_grad[p];
            assert!(
                (analytic - numeric).abs() <= 1e-5 * numeric.abs().max(1e-3),
                "param {p}: analytic {analytic} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn evaluate_reports_one_entry_per_curve() {
        let cfg = SceneConfig { k: 2, ..SceneConfig::default() };
        let scene = generate_scene(4, &cfg).unwrap();
        let gen = WeightGenerator::random_init(2, 0.3, 9);
        for mode in [WeightMode::SquaredScore, WeightMode::SigmoidScore] {
            let evals = evaluate_scene(&gen, &scene, mode, &LossConfig::default()).unwrap();
            assert_eq!(evals.len(), 2);
            for e in &evals {
                let err = e.error.expect("random init should not be degenerate");
                assert!(err.is_finite() && err >= 0.0);
            }
        }
    }

    #[test]
    fn map_count_mismatch_is_rejected() {
        let scene = generate_scene(1, &tiny_cfg()).unwrap();
        let gen = WeightGenerator::zeros(3);
        assert!(scene_loss_and_grad(&gen, &scene, &LossConfig::default()).is_err());
        assert!(evaluate_scene(&gen, &scene, WeightMode::SquaredScore, &LossConfig::default())
            .is_err());
    }

    #[test]
    fn uniform_weights_put_area_fraction_on_distractors() {
        let cfg = SceneConfig {
            k: 1,
            noise: 0.0,
            distractors: Some(DistractorSpec {
                count: (1, 1),
                radius: (3.0, 3.0),
                intensity: (0.7, 0.7),
            }),
            ..SceneConfig::default()
        };
        let scene = generate_scene(6, &cfg).unwrap();
        assert_eq!(scene.distractors.len(), 1);
        let mut params = vec![0.0; PARAMS_PER_MAP];
        params[PARAMS_PER_MAP - 1] = 1.0;
        let gen = WeightGenerator::new(1, params).unwrap();
        let frac = distractor_weight_fraction(&gen, &scene, WeightMode::SquaredScore);
        // a radius-3 disc covers ~28 of 8192 pixels
        let expect = 29.0 / 8192.0;
        assert!((frac - expect).abs() < 0.5 * expect, "{frac} vs {expect}");
        // no distractors ⇒ exactly zero
        let clean = generate_scene(6, &tiny_cfg()).unwrap();
        assert_eq!(distractor_weight_fraction(&gen, &clean, WeightMode::SquaredScore), 0.0);
    }
}
