//! Command implementations.
//!
//! Output discipline: artifacts are written to a temp file in the target
//! directory and renamed into place, so a failed command never leaves a
//! partial file. All numeric output is deterministic for a given config —
//! wall-clock timings go to stderr only.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use curvefit_lab::scene::{generate_scene_set, write_scene};
use curvefit_lab::svg::render_toy_frame;
use curvefit_lab::toy::run_toy;
use curvefit_lab::train::{
    evaluate, mean_distractor_fraction, read_generator, train, write_generator,
    write_report_csv, Regime,
};
use curvefit_lab::verify;

use crate::config::FileConfig;
use crate::error::{CliError, Result};

/// Environment variable that re-roots relative output directories.
pub const OUT_ROOT_ENV: &str = "CURVEFIT_OUT";

/// Joins a relative artifact path under `$CURVEFIT_OUT` when that is set;
/// absolute paths and unset environments pass through. Applies to output
/// directories and to artifact inputs (eval's `params`) alike, so a
/// re-rooted `train` and a re-rooted `eval` agree on where things live.
fn reroot(path: PathBuf) -> PathBuf {
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path,
    }
}

/// Resolves the artifact directory: `--out` beats `output_dir` beats
/// `"out"`; a relative result is joined under `$CURVEFIT_OUT` when set.
fn resolve_out_dir(flag: Option<PathBuf>, config_dir: Option<&Path>) -> PathBuf {
    reroot(flag.unwrap_or_else(|| {
        config_dir.map_or_else(|| PathBuf::from("out"), Path::to_path_buf)
    }))
}

/// Writes a file atomically: temp file in the same directory, rename on
/// success, best-effort cleanup on failure.
fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut out = BufWriter::new(File::create(&tmp)?);
        fill(&mut out)?;
        out.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn cmd_toy(config: &Path, mode: Option<&str>, out: Option<PathBuf>) -> Result<()> {
    let file = FileConfig::load(config)?;
    let (cfg, frames) = file.toy_config(mode)?;
    let trajectory = run_toy(&cfg)?;
    let dir = resolve_out_dir(out, file.output_dir.as_deref());
    let csv_path = dir.join("trajectory.csv");
    write_atomic(&csv_path, |w| trajectory.write_csv(w).map_err(CliError::from))?;
    if frames {
        for rec in &trajectory.records {
            let svg = render_toy_frame(rec, &cfg.target);
            let path = dir.join("frames").join(format!("step_{:04}.svg", rec.step));
            write_atomic(&path, |w| w.write_all(svg.as_bytes()).map_err(CliError::from))?;
        }
    }
    println!(
        "toy mode={} steps={} final_loss={:e}",
        cfg.mode.as_str(),
        cfg.steps,
        trajectory.final_loss()
    );
    println!("wrote {}", csv_path.display());
    Ok(())
}

pub fn cmd_gen_scenes(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let file = FileConfig::load(config)?;
    let (scene_cfg, seed0, count) = file.scene_setup()?;
    let scenes = generate_scene_set(seed0, count, &scene_cfg)?;
    let dir = resolve_out_dir(out, file.output_dir.as_deref());
    for (i, scene) in scenes.iter().enumerate() {
        let path = dir.join(format!("scene_{i:04}.lsim"));
        write_atomic(&path, |w| write_scene(scene, w).map_err(CliError::from))?;
    }
    println!("wrote {count} scenes (seeds {seed0}..{}) to {}", seed0 + count as u64, dir.display());
    Ok(())
}

pub fn cmd_train(config: &Path, regime_str: &str, out: Option<PathBuf>) -> Result<()> {
    let regime: Regime = regime_str.parse().map_err(CliError::from)?;
    let file = FileConfig::load(config)?;
    let (scene_cfg, seed0, count) = file.scene_setup()?;
    let train_cfg = file.train_config(regime)?;
    let scenes = generate_scene_set(seed0, count, &scene_cfg)?;
    let outcome = train(regime, &scenes, &train_cfg)?;
    let dir = resolve_out_dir(out, file.output_dir.as_deref());

    let params_path = dir.join(format!("params_{}.txt", regime.token()));
    write_atomic(&params_path, |w| {
        write_generator(&outcome.generator, w).map_err(CliError::from)
    })?;
    let report_path = dir.join(format!("report_{}.csv", regime.token()));
    write_atomic(&report_path, |w| {
        write_report_csv(&outcome.report, w).map_err(CliError::from)
    })?;

    let last = outcome.report.epochs.last();
    println!(
        "trained regime={} epochs={} final_train_loss={} final_val_error={} skipped_fits={}",
        regime.as_str(),
        outcome.report.epochs.len(),
        last.map_or("n/a".into(), |e| format!("{:e}", e.train_loss)),
        last.map_or("n/a".into(), |e| format!("{:e}", e.val_error)),
        outcome.report.skipped_fits,
    );
    println!("wrote {} and {}", params_path.display(), report_path.display());
    eprintln!("wall clock: {:.2}s", outcome.report.wall_clock_secs);
    Ok(())
}

pub fn cmd_eval(config: &Path, report: Option<PathBuf>) -> Result<()> {
    let file = FileConfig::load(config)?;
    let (scene_cfg, seed0, count) = file.scene_setup()?;
    let settings = file.eval_config()?;
    let params_path = reroot(settings.params.clone());
    let generator = {
        let f = File::open(&params_path).map_err(|e| {
            CliError::Config(format!("cannot read params {}: {e}", params_path.display()))
        })?;
        read_generator(&mut BufReader::new(f))?
    };
    let scenes = generate_scene_set(seed0, count, &scene_cfg)?;
    let outcome = evaluate(&generator, &scenes, settings.mode, &settings.loss_cfg, settings.error_cap)?;
    let distractor_mass = mean_distractor_fraction(&generator, &scenes, settings.mode);

    let report_path = report.map(reroot).unwrap_or_else(|| {
        resolve_out_dir(None, file.output_dir.as_deref()).join("eval_report.csv")
    });
    write_atomic(&report_path, |w| {
        writeln!(w, "scene_seed,curve,error,degenerate")?;
        for scene in &scenes {
            let evals = curvefit_lab::pipeline::evaluate_scene(
                &generator,
                scene,
                settings.mode,
                &settings.loss_cfg,
            )?;
            for (k, e) in evals.iter().enumerate() {
                match e.error {
                    Some(err) => writeln!(
                        w,
                        "{},{},{},0",
                        scene.seed,
                        k,
                        err.min(settings.error_cap)
                    )?,
                    None => writeln!(w, "{},{},{},1", scene.seed, k, settings.error_cap)?,
                }
            }
        }
        Ok(())
    })?;
    println!(
        "eval mean_error={} curves={} degenerate={} distractor_mass={}",
        outcome.mean_error, outcome.curves, outcome.degenerate, distractor_mass
    );
    println!("wrote {}", report_path.display());
    Ok(())
}

const CHECK_CASES: usize = 200;
const CHECK_SEED: u64 = 1000;

pub fn cmd_check(suite: Option<&str>) -> Result<()> {
    let outcomes = match suite {
        None => verify::run_all(CHECK_CASES, CHECK_SEED)?,
        Some("oracle") => vec![verify::solver_oracle_sweep(CHECK_CASES, CHECK_SEED, 1e-8)?],
        Some("grads") => vec![
            verify::fit_gradient_sweep(CHECK_CASES, CHECK_SEED + 10_000, 1e-5, 1e-9)?,
            verify::homography_gradient_sweep(CHECK_CASES, CHECK_SEED + 50_000, 1e-6)?,
        ],
        Some("losses") => vec![
            verify::loss_closed_form_sweep(CHECK_CASES, CHECK_SEED + 20_000, 1e-9)?,
            verify::loss_gradient_sweep(CHECK_CASES, CHECK_SEED + 30_000, 1e-7)?,
        ],
        Some(other) => {
            return Err(CliError::config(format!(
                "unknown suite {other:?} (expected grads, losses or oracle)"
            )))
        }
    };
    let mut failed = Vec::new();
    for outcome in &outcomes {
        println!("{outcome}");
        if !outcome.passed() {
            failed.push(outcome.label);
        }
    }
    if failed.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Tolerance(format!("tolerance failures in: {}", failed.join(", "))))
    }
}
