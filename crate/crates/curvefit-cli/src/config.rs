//! TOML experiment configuration.
//!
//! One file can hold all sections; each command reads the ones it needs.
//! Unknown keys anywhere are rejected, parse failures surface with the
//! line/column the TOML parser reports, and every value is validated by
//! the owning module before a command runs. Omitted keys fall back to the
//! committed defaults, so a section only needs the values it wants to
//! change.

use std::path::{Path, PathBuf};

use curvefit::CurveParams;
use curvefit_lab::scene::{DashSpec, DistractorSpec, SceneConfig};
use curvefit_lab::toy::{ToyConfig, ToyMode};
use curvefit_lab::train::{Regime, TrainConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Base directory for artifacts; `--out` overrides it, and the
    /// `CURVEFIT_OUT` environment variable re-roots relative paths.
    pub output_dir: Option<PathBuf>,
    pub toy: Option<ToySection>,
    pub scenes: Option<ScenesSection>,
    pub train: Option<TrainSection>,
    pub eval: Option<EvalSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySection {
    pub mode: Option<String>,
    pub lr: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub num_points: Option<usize>,
    pub perturbation: Option<f64>,
    pub t: Option<f64>,
    /// Target line coefficients, constant term first.
    pub target: Option<[f64; 2]>,
    /// Write one SVG frame per recorded step (default true).
    pub svg_frames: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenesSection {
    /// Seed of the first scene; scene i uses `seed + i`.
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub height: Option<usize>,
    pub width: Option<usize>,
    pub k: Option<usize>,
    pub t: Option<f64>,
    /// Image → ortho homography, nine row-major numbers.
    pub homography: Option<[f64; 9]>,
    pub noise: Option<f64>,
    pub marking_intensity: Option<[f64; 2]>,
    pub half_thickness: Option<[f64; 2]>,
    pub dashed: Option<bool>,
    pub dash_on: Option<f64>,
    pub dash_off: Option<f64>,
    pub distractors: Option<bool>,
    pub distractor_count: Option<[usize; 2]>,
    pub distractor_radius: Option<[f64; 2]>,
    pub distractor_intensity: Option<[f64; 2]>,
    pub lateral_span: Option<f64>,
    pub offset_jitter: Option<f64>,
    pub slope_max: Option<f64>,
    pub curvature_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    /// Learning rate; defaults per regime when omitted.
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub init_scale: Option<f64>,
    pub t: Option<f64>,
    pub quad_segments: Option<usize>,
    pub error_cap: Option<f64>,
    pub label_half_thickness: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Trained parameters file, as written by `train`.
    pub params: PathBuf,
    /// How scores become fitting weights: "squared" or "sigmoid".
    pub weights: Option<String>,
    pub t: Option<f64>,
    pub quad_segments: Option<usize>,
    pub error_cap: Option<f64>,
}

fn section_err(section: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("in [{section}]: {err}"))
}

macro_rules! apply {
    ($section:expr, $cfg:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $section.$field { $cfg.$field = v; })+
    };
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("in {}: {e}", path.display())))
    }

    /// Toy experiment settings; `mode_flag` (from `--mode`) overrides the
    /// config's `toy.mode`. Returns the config and whether to emit frames.
    pub fn toy_config(&self, mode_flag: Option<&str>) -> Result<(ToyConfig, bool)> {
        let section = self.toy.as_ref().ok_or_else(|| {
            CliError::config("missing [toy] section (required by the toy command)")
        })?;
        let mode_str = mode_flag.or(section.mode.as_deref()).ok_or_else(|| {
            CliError::config("toy.mode missing (set it in [toy] or pass --mode)")
        })?;
        let mode: ToyMode = mode_str.parse().map_err(|e| section_err("toy", e))?;
        let mut cfg = ToyConfig::default_for(mode);
        apply!(section, cfg, lr, steps, seed, num_points, perturbation, t);
        if let Some(target) = section.target {
            cfg.target =
                CurveParams::new(target.to_vec()).map_err(|e| section_err("toy", e))?;
        }
        cfg.validate().map_err(|e| section_err("toy", e))?;
        Ok((cfg, section.svg_frames.unwrap_or(true)))
    }

    /// Scene generation settings: the scene family config plus the first
    /// seed and the scene count.
    pub fn scene_setup(&self) -> Result<(SceneConfig, u64, usize)> {
        let section = self.scenes.as_ref().ok_or_else(|| {
            CliError::config("missing [scenes] section (required by this command)")
        })?;
        let mut cfg = SceneConfig::default();
        apply!(
            section, cfg, height, width, k, t, homography, noise, lateral_span, offset_jitter,
            slope_max, curvature_max,
        );
        if let Some(v) = section.marking_intensity {
            cfg.marking_intensity = (v[0], v[1]);
        }
        if let Some(v) = section.half_thickness {
            cfg.half_thickness = (v[0], v[1]);
        }
        let dashed = section.dashed.unwrap_or(true);
        if !dashed && (section.dash_on.is_some() || section.dash_off.is_some()) {
            return Err(section_err("scenes", "dash_on/dash_off set but dashed = false"));
        }
        let dash_base = cfg.dash.unwrap_or(DashSpec { on: 0.10, off: 0.05 });
        cfg.dash = dashed.then_some(DashSpec {
            on: section.dash_on.unwrap_or(dash_base.on),
            off: section.dash_off.unwrap_or(dash_base.off),
        });
        let with_blobs = section.distractors.unwrap_or(true);
        if !with_blobs
            && (section.distractor_count.is_some()
                || section.distractor_radius.is_some()
                || section.distractor_intensity.is_some())
        {
            return Err(section_err("scenes", "distractor_* set but distractors = false"));
        }
        let blob_base = cfg.distractors.unwrap_or(DistractorSpec {
            count: (1, 2),
            radius: (2.5, 4.0),
            intensity: (0.55, 0.8),
        });
        cfg.distractors = with_blobs.then_some(DistractorSpec {
            count: section.distractor_count.map_or(blob_base.count, |v| (v[0], v[1])),
            radius: section.distractor_radius.map_or(blob_base.radius, |v| (v[0], v[1])),
            intensity: section
                .distractor_intensity
                .map_or(blob_base.intensity, |v| (v[0], v[1])),
        });
        cfg.validate().map_err(|e| section_err("scenes", e))?;
        Ok((cfg, section.seed.unwrap_or(100), section.count.unwrap_or(250)))
    }

    /// Training settings for one regime; omitted keys use the committed
    /// per-regime defaults. The [train] section itself may be absent.
    pub fn train_config(&self, regime: Regime) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default_for(regime);
        if let Some(section) = &self.train {
            apply!(
                section, cfg, epochs, lr, seed, init_scale, t, quad_segments, error_cap,
                label_half_thickness,
            );
        }
        cfg.validate().map_err(|e| section_err("train", e))?;
        Ok(cfg)
    }

    /// Evaluation settings: parameter file, weight mode, metric config.
    pub fn eval_config(&self) -> Result<EvalSettings> {
        let section = self.eval.as_ref().ok_or_else(|| {
            CliError::config("missing [eval] section (required by the eval command)")
        })?;
        let mode = match section.weights.as_deref().unwrap_or("squared") {
            "squared" => curvefit_lab::pipeline::WeightMode::SquaredScore,
            "sigmoid" => curvefit_lab::pipeline::WeightMode::SigmoidScore,
            other => {
                return Err(section_err(
                    "eval",
                    format!("weights must be \"squared\" or \"sigmoid\", got {other:?}"),
                ))
            }
        };
        let loss_cfg = curvefit::LossConfig {
            t: section.t.unwrap_or(1.0),
            quad_segments: section.quad_segments.unwrap_or(1000),
        };
        loss_cfg.validate().map_err(|e| section_err("eval", e))?;
        let error_cap = section.error_cap.unwrap_or(0.5);
        if !error_cap.is_finite() || error_cap <= 0.0 {
            return Err(section_err("eval", format!("error_cap must be > 0, got {error_cap}")));
        }
        Ok(EvalSettings { params: section.params.clone(), mode, loss_cfg, error_cap })
    }
}

pub struct EvalSettings {
    pub params: PathBuf,
    pub mode: curvefit_lab::pipeline::WeightMode,
    pub loss_cfg: curvefit::LossConfig,
    pub error_cap: f64,
}
