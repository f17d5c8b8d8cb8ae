//! Training loops for the two lane-fitting regimes and the shared
//! evaluation path.
//!
//! * **End-to-end** ([`train_end_to_end`]): the geometric loss between the
//!   fitted and ground-truth curves is backpropagated through the
//!   least-squares fit into the weight generator. The model never sees a
//!   pixel-level label; supervision is "the resulting curve should be
//!   right".
//! * **Cross-entropy** ([`train_cross_entropy`]): the classic two-step
//!   baseline. The generator is trained as a per-pixel classifier against
//!   rendered curve masks (binary cross-entropy on logits); at evaluation
//!   time its probabilities are used as fitting weights.
//!
//! Both loops are plain per-scene gradient descent in a fixed scene order
//! with a fixed seed, so runs are bit-reproducible. Wall-clock time is
//! reported on the summary struct but deliberately kept out of the CSV
//! artifacts, which must be byte-identical across runs.

use std::io::{BufRead, Write};
use std::time::Instant;

use curvefit::LossConfig;

use crate::error::Error;
use crate::generator::{WeightGenerator, PARAMS_PER_MAP};
use crate::pipeline::{evaluate_scene, scene_loss_and_grad, sigmoid, WeightMode};
use crate::scene::{curve_track, stamp_disc, Grid, SyntheticScene};
use crate::Result;

/// Which supervision signal trains the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    EndToEnd,
    CrossEntropy,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::EndToEnd => "end-to-end",
            Regime::CrossEntropy => "cross-entropy",
        }
    }

    /// Short token used in artifact file names.
    pub fn token(&self) -> &'static str {
        match self {
            Regime::EndToEnd => "end2end",
            Regime::CrossEntropy => "xent",
        }
    }

    /// Weight mode the regime's scores imply at fitting time.
    pub fn weight_mode(&self) -> WeightMode {
        match self {
            Regime::EndToEnd => WeightMode::SquaredScore,
            Regime::CrossEntropy => WeightMode::SigmoidScore,
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "end-to-end" | "end2end" | "e2e" => Ok(Regime::EndToEnd),
            "cross-entropy" | "xent" => Ok(Regime::CrossEntropy),
            other => Err(Error::invalid_config(format!(
                "unknown regime {other:?} (expected end2end or xent)"
            ))),
        }
    }
}

/// Hyperparameters shared by both training loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Loss/metric horizon in the ortho frame.
    pub t: f64,
    /// Quadrature resolution for the evaluation metric.
    pub quad_segments: usize,
    /// Seed of the generator initialization.
    pub seed: u64,
    /// Uniform half-width of the random parameter initialization.
    pub init_scale: f64,
    /// Per-curve evaluation errors are clipped here; degenerate fits are
    /// charged exactly this value.
    pub error_cap: f64,
    /// Stroke half-thickness (pixels) of the rendered cross-entropy
    /// label masks.
    pub label_half_thickness: f64,
}

impl TrainConfig {
    pub fn default_for(regime: Regime) -> Self {
        TrainConfig {
            epochs: 40,
            lr: match regime {
                Regime::EndToEnd => 3.0,
                Regime::CrossEntropy => 10.0,
            },
            t: 1.0,
            quad_segments: 1000,
            seed: 7,
            init_scale: 0.3,
            error_cap: 0.5,
            label_half_thickness: 1.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::invalid_config(format!("lr must be ≥ 0, got {}", self.lr)));
        }
        self.loss_config().validate().map_err(Error::Fit)?;
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::invalid_config(format!(
                "init_scale must be ≥ 0, got {}",
                self.init_scale
            )));
        }
        if !self.error_cap.is_finite() || self.error_cap <= 0.0 {
            return Err(Error::invalid_config(format!(
                "error_cap must be > 0, got {}",
                self.error_cap
            )));
        }
        if !self.label_half_thickness.is_finite()
            || !(0.3..=8.0).contains(&self.label_half_thickness)
        {
            return Err(Error::invalid_config(format!(
                "label_half_thickness must be in [0.3, 8], got {}",
                self.label_half_thickness
            )));
        }
        Ok(())
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig { t: self.t, quad_segments: self.quad_segments }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::default_for(Regime::EndToEnd)
    }
}

/// One epoch of the training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Regime-specific objective, averaged over usable training scenes.
    pub train_loss: f64,
    /// Mean capped area error on the validation split.
    pub val_error: f64,
}

/// Summary of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub regime: Regime,
    pub epochs: Vec<EpochRecord>,
    /// Curve fits skipped as degenerate during end-to-end training.
    pub skipped_fits: usize,
    /// Informational only; never serialized into artifacts.
    pub wall_clock_secs: f64,
}

/// Trained generator plus its report.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub generator: WeightGenerator,
    pub report: TrainReport,
}

/// Deterministic 80/20 split: the leading scenes train, the trailing fifth
/// validates. Sets too small to spare a scene validate on the training
/// split itself rather than on nothing.
pub fn split_scenes(scenes: &[SyntheticScene]) -> (&[SyntheticScene], &[SyntheticScene]) {
    let n_val = scenes.len() / 5;
    if n_val == 0 {
        (scenes, scenes)
    } else {
        scenes.split_at(scenes.len() - n_val)
    }
}

fn scene_set_k(scenes: &[SyntheticScene]) -> Result<usize> {
    let first = scenes
        .first()
        .ok_or_else(|| Error::invalid_config("training needs at least one scene"))?;
    let k = first.gt.len();
    if let Some(bad) = scenes.iter().find(|s| s.gt.len() != k) {
        return Err(Error::invalid_config(format!(
            "scene set mixes curve counts ({k} vs {})",
            bad.gt.len()
        )));
    }
    Ok(k)
}

/// Mean capped area error of a scene set under one weight mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOutcome {
    pub mean_error: f64,
    /// Total curves evaluated.
    pub curves: usize,
    /// Curves whose fit was degenerate (each charged `error_cap`).
    pub degenerate: usize,
}

/// Fits every curve of every scene and averages the capped area error.
pub fn evaluate(
    gen: &WeightGenerator,
    scenes: &[SyntheticScene],
    mode: WeightMode,
    loss_cfg: &LossConfig,
    error_cap: f64,
) -> Result<EvalOutcome> {
    if scenes.is_empty() {
        return Err(Error::invalid_config("evaluation needs at least one scene"));
    }
    if !error_cap.is_finite() || error_cap <= 0.0 {
        return Err(Error::invalid_config(format!("error_cap must be > 0, got {error_cap}")));
    }
    let mut sum = 0.0;
    let mut curves = 0;
    let mut degenerate = 0;
    for scene in scenes {
        for eval in evaluate_scene(gen, scene, mode, loss_cfg)? {
            curves += 1;
            match eval.error {
                Some(err) => sum += err.min(error_cap),
                None => {
                    degenerate += 1;
                    sum += error_cap;
                }
            }
        }
    }
    Ok(EvalOutcome { mean_error: sum / curves as f64, curves, degenerate })
}

/// Mean fraction of pixel weight landing on distractor blobs across a
/// scene set.
pub fn mean_distractor_fraction(
    gen: &WeightGenerator,
    scenes: &[SyntheticScene],
    mode: WeightMode,
) -> f64 {
    if scenes.is_empty() {
        return 0.0;
    }
    let sum: f64 = scenes
        .iter()
        .map(|s| crate::pipeline::distractor_weight_fraction(gen, s, mode))
        .sum();
    sum / scenes.len() as f64
}

fn check_params_finite(gen: &WeightGenerator, epoch: usize) -> Result<()> {
    if gen.params().iter().any(|p| !p.is_finite()) {
        return Err(Error::DivergedState { step: epoch, quantity: "generator parameters" });
    }
    Ok(())
}

/// Trains the generator by backpropagating the geometric curve loss
/// through the fit. Scenes with only degenerate fits contribute nothing to
/// an epoch; individual degenerate curves are skipped and counted.
pub fn train_end_to_end(scenes: &[SyntheticScene], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let k = scene_set_k(scenes)?;
    let loss_cfg = cfg.loss_config();
    let (train, val) = split_scenes(scenes);
    let mut gen = WeightGenerator::random_init(k, cfg.init_scale, cfg.seed);
    let mut skipped = 0;
    let mut records = Vec::with_capacity(cfg.epochs);
    let start = Instant::now();
    for epoch in 0..cfg.epochs {
        let mut sum = 0.0;
        let mut counted = 0usize;
        for scene in train {
            let step = scene_loss_and_grad(&gen, scene, &loss_cfg)?;
            skipped += step.degenerate;
            if step.fitted == 0 {
                continue;
            }
            sum += step.loss;
            counted += 1;
            for (p, g) in gen.params_mut().iter_mut().zip(&step.param_grad) {
                *p -= cfg.lr * g;
            }
        }
        if counted == 0 {
            return Err(Error::DivergedState { step: epoch, quantity: "usable scene fits" });
        }
        let train_loss = sum / counted as f64;
        if !train_loss.is_finite() {
            return Err(Error::DivergedState { step: epoch, quantity: "training loss" });
        }
        check_params_finite(&gen, epoch)?;
        let val_eval = evaluate(&gen, val, WeightMode::SquaredScore, &loss_cfg, cfg.error_cap)?;
        records.push(EpochRecord { epoch, train_loss, val_error: val_eval.mean_error });
    }
    Ok(TrainOutcome {
        generator: gen,
        report: TrainReport {
            regime: Regime::EndToEnd,
            epochs: records,
            skipped_fits: skipped,
            wall_clock_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// Renders per-curve binary label masks for cross-entropy training: solid
/// strokes of fixed half-thickness along each ground-truth curve over
/// `u ∈ [0, t]`, ignoring dashes, noise and distractors.
pub fn render_labels(
    scene: &SyntheticScene,
    half_thickness: f64,
    t: f64,
) -> Result<Vec<Grid>> {
    let hinv = scene.homography.inverse().map_err(Error::Fit)?;
    let (h, w) = (scene.image.h(), scene.image.w());
    let samples = 4 * h.max(w);
    Ok(scene
        .gt
        .iter()
        .map(|curve| {
            let mut mask = Grid::zeros(h, w);
            for (_, fr, fc) in curve_track(curve, &hinv, h, w, t, samples) {
                stamp_disc(&mut mask, fr, fc, half_thickness, 1.0);
            }
            mask
        })
        .collect())
}

/// Mean binary cross-entropy of the generator's logits against the label
/// masks, with its parameter gradient.
pub fn scene_bce_and_grad(
    gen: &WeightGenerator,
    scene: &SyntheticScene,
    labels: &[Grid],
) -> Result<(f64, Vec<f64>)> {
    if labels.len() != gen.k() {
        return Err(Error::invalid_config(format!(
            "{} label masks for {} maps",
            labels.len(),
            gen.k()
        )));
    }
    let image = &scene.image;
    let pixels = image.h() * image.w();
    let norm = 1.0 / (gen.k() * pixels) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; gen.params().len()];
    for (map, mask) in labels.iter().enumerate() {
        if mask.h() != image.h() || mask.w() != image.w() {
            return Err(Error::invalid_config("label mask dimensions do not match the image"));
        }
        let scores = gen.scores(image, map);
        let mut d_scores = Vec::with_capacity(pixels);
        for (s, y) in scores.iter().zip(mask.data()) {
            // stable logits formulation: max(s,0) − s·y + ln(1 + e^{−|s|})
            loss += (s.max(0.0) - s * y + (-s.abs()).exp().ln_1p()) * norm;
            d_scores.push((sigmoid(*s) - y) * norm);
        }
        gen.accumulate_score_grad(image, map, &d_scores, &mut grad);
    }
    Ok((loss, grad))
}

/// Trains the generator as a per-pixel classifier against rendered curve
/// masks. Fitting only happens at evaluation time, with sigmoid weights.
pub fn train_cross_entropy(scenes: &[SyntheticScene], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let k = scene_set_k(scenes)?;
    let loss_cfg = cfg.loss_config();
    let (train, val) = split_scenes(scenes);
    let labels: Vec<Vec<Grid>> = train
        .iter()
        .map(|s| render_labels(s, cfg.label_half_thickness, cfg.t))
        .collect::<Result<_>>()?;
    let mut gen = WeightGenerator::random_init(k, cfg.init_scale, cfg.seed);
    let mut records = Vec::with_capacity(cfg.epochs);
    let start = Instant::now();
    for epoch in 0..cfg.epochs {
        let mut sum = 0.0;
        for (scene, masks) in train.iter().zip(&labels) {
            let (loss, grad) = scene_bce_and_grad(&gen, scene, masks)?;
            sum += loss;
            for (p, g) in gen.params_mut().iter_mut().zip(&grad) {
                *p -= cfg.lr * g;
            }
        }
        let train_loss = sum / train.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::DivergedState { step: epoch, quantity: "training loss" });
        }
        check_params_finite(&gen, epoch)?;
        let val_eval = evaluate(&gen, val, WeightMode::SigmoidScore, &loss_cfg, cfg.error_cap)?;
        records.push(EpochRecord { epoch, train_loss, val_error: val_eval.mean_error });
    }
    Ok(TrainOutcome {
        generator: gen,
        report: TrainReport {
            regime: Regime::CrossEntropy,
            epochs: records,
            skipped_fits: 0,
            wall_clock_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// Dispatches on the regime.
pub fn train(regime: Regime, scenes: &[SyntheticScene], cfg: &TrainConfig) -> Result<TrainOutcome> {
    match regime {
        Regime::EndToEnd => train_end_to_end(scenes, cfg),
        Regime::CrossEntropy => train_cross_entropy(scenes, cfg),
    }
}

/// Writes the per-epoch record as CSV (`epoch,train_loss,val_error`).
pub fn write_report_csv<W: Write>(report: &TrainReport, out: &mut W) -> Result<()> {
    writeln!(out, "epoch,train_loss,val_error")?;
    for r in &report.epochs {
        writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_error)?;
    }
    Ok(())
}

/// Writes generator parameters as plain text: a `k <count>` header, then
/// one parameter per line in full round-trip precision.
pub fn write_generator<W: Write>(gen: &WeightGenerator, out: &mut W) -> Result<()> {
    writeln!(out, "k {}", gen.k())?;
    for p in gen.params() {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

/// Reads a generator written by [`write_generator`].
pub fn read_generator<R: BufRead>(input: &mut R) -> Result<WeightGenerator> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid_config("empty generator file"))??;
    let k: usize = header
        .strip_prefix("k ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            Error::invalid_config(format!("bad generator header {header:?} (expected `k <count>`)"))
        })?;
    let mut params = Vec::with_capacity(k * PARAMS_PER_MAP);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::invalid_config(format!("bad parameter line {line:?}")))?;
        params.push(v);
    }
    WeightGenerator::new(k, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene_set, SceneConfig};

    fn small_cfg() -> SceneConfig {
        SceneConfig {
            height: 16,
            width: 24,
            k: 1,
            noise: 0.0,
            dash: None,
            distractors: None,
            ..SceneConfig::default()
        }
    }

    fn quick_train_cfg() -> TrainConfig {
        TrainConfig { epochs: 2, quad_segments: 100, ..TrainConfig::default() }
    }

    #[test]
    fn split_is_80_20_with_small_set_fallback() {
        let scenes = generate_scene_set(0, 10, &small_cfg()).unwrap();
        let (train, val) = split_scenes(&scenes);
        assert_eq!((train.len(), val.len()), (8, 2));
        assert_eq!(val[0].seed, scenes[8].seed);
        let few = &scenes[..3];
        let (train, val) = split_scenes(few);
        assert_eq!((train.len(), val.len()), (3, 3));
    }

    #[test]
    fn labels_are_binary_strokes() {
        let scenes = generate_scene_set(1, 1, &small_cfg()).unwrap();
        let masks = render_labels(&scenes[0], 1.1, 1.0).unwrap();
        assert_eq!(masks.len(), 1);
        let lit: usize = masks[0].data().iter().filter(|&&v| v == 1.0).count();
        assert!(lit > 0, "label mask is empty");
        assert!(masks[0].data().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn bce_at_zero_logits_is_ln_two() {
        let scenes = generate_scene_set(2, 1, &small_cfg()).unwrap();
        let masks = render_labels(&scenes[0], 1.1, 1.0).unwrap();
        let gen = WeightGenerator::zeros(1);
        let (loss, grad) = scene_bce_and_grad(&gen, &scenes[0], &masks).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12, "{loss}");
        assert!(grad.iter().any(|&g| g != 0.0));
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let scenes = generate_scene_set(3, 1, &small_cfg()).unwrap();
        let masks = render_labels(&scenes[0], 1.1, 1.0).unwrap();
        let gen = WeightGenerator::random_init(1, 0.4, 11);
        let (_, grad) = scene_bce_and_grad(&gen, &scenes[0], &masks).unwrap();
        let h = 1e-6;
        for (p, &analytic) in grad.iter().enumerate() {
            let mut plus = gen.clone();
            plus.params_mut()[p] += h;
            let mut minus = gen.clone();
            minus.params_mut()[p] -= h;
            let lp = scene_bce_and_grad(&plus, &scenes[0], &masks).unwrap().0;
            let lm = scene_bce_and_grad(&minus, &scenes[0], &masks).unwrap().0;
            let numeric = (lp - lm) / (2.0 * h);
            assert!(
                (analytic - numeric).abs() <= 1e-5 * numeric.abs().max(1e-6),
                "param {p}: analytic {analytic} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn zero_learning_rate_trains_in_place() {
        let scenes = generate_scene_set(4, 3, &small_cfg()).unwrap();
        let cfg = TrainConfig { lr: 0.0, ..quick_train_cfg() };
        for regime in [Regime::EndToEnd, Regime::CrossEntropy] {
            let out = train(regime, &scenes, &cfg).unwrap();
            let init = WeightGenerator::random_init(1, cfg.init_scale, cfg.seed);
            assert_eq!(out.generator, init, "{regime:?} moved parameters at lr 0");
            let e = &out.report.epochs;
            assert_eq!(e.len(), 2);
            assert_eq!(e[0].train_loss.to_bits(), e[1].train_loss.to_bits());
        }
    }

    #[test]
    fn training_is_deterministic() {
        let scenes = generate_scene_set(5, 4, &small_cfg()).unwrap();
        let cfg = quick_train_cfg();
        for regime in [Regime::EndToEnd, Regime::CrossEntropy] {
            let a = train(regime, &scenes, &cfg).unwrap();
            let b = train(regime, &scenes, &cfg).unwrap();
            assert_eq!(a.generator, b.generator);
            assert_eq!(a.report.epochs, b.report.epochs);
        }
    }

    #[test]
    fn degenerate_generator_evaluates_at_the_cap() {
        let scenes = generate_scene_set(6, 2, &small_cfg()).unwrap();
        let gen = WeightGenerator::zeros(1);
        let out = evaluate(&gen, &scenes, WeightMode::SquaredScore, &LossConfig::default(), 0.5)
            .unwrap();
        assert_eq!(out.degenerate, 2);
        assert_eq!(out.curves, 2);
        assert_eq!(out.mean_error, 0.5);
        // sigmoid mode puts 0.5 weight everywhere and fits fine
        let out = evaluate(&gen, &scenes, WeightMode::SigmoidScore, &LossConfig::default(), 0.5)
            .unwrap();
        assert_eq!(out.degenerate, 0);
    }

    #[test]
    fn generator_file_roundtrips_exactly() {
        let gen = WeightGenerator::random_init(2, 0.7, 99);
        let mut bytes = Vec::new();
        write_generator(&gen, &mut bytes).unwrap();
        let back = read_generator(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, gen);
        assert!(read_generator(&mut &b"nonsense\n1.0\n"[..]).is_err());
    }

    #[test]
    fn report_csv_has_one_row_per_epoch() {
        let scenes = generate_scene_set(7, 2, &small_cfg()).unwrap();
        let out = train_cross_entropy(&scenes, &quick_train_cfg()).unwrap();
        let mut bytes = Vec::new();
        write_report_csv(&out.report, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "epoch,train_loss,val_error");
        assert!(lines[1].starts_with("0,"));
    }

    #[test]
    fn regime_strings_roundtrip() {
        for regime in [Regime::EndToEnd, Regime::CrossEntropy] {
            assert_eq!(regime.as_str().parse::<Regime>().unwrap(), regime);
        }
        assert!("nonsense".parse::<Regime>().is_err());
        assert_eq!("e2e".parse::<Regime>().unwrap(), Regime::EndToEnd);
        assert_eq!("xent".parse::<Regime>().unwrap(), Regime::CrossEntropy);
    }
}
