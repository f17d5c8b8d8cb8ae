//! Descent study on a line fit: which inputs can gradient descent move?
//!
//! A line is fitted through a handful of weighted points; the geometric
//! loss compares it against a fixed target line over `[0, t]`; the loss
//! gradient flows back through the fit to the point coordinates and
//! weights. Three modes pick the descent variables:
//!
//! * `coords` — move `(x_i, y_i)`, weights frozen;
//! * `weights` — move weights, coordinates frozen;
//! * `both` — move everything.
//!
//! Weights stay non-negative by construction: the descent variable is the
//! raw `u_i` with `w_i = u_i²`, so the update multiplies the weight
//! gradient by `∂w/∂u = 2u`. Plain gradient descent with a fixed step; no
//! momentum, no line search — the point is to watch the mechanism, not to
//! optimize fast.

use curvefit::{
    backward_fit, geometric_loss_line, solve_weighted_ls, CurveParams, LossConfig,
    WeightedPointSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::str::FromStr;

use crate::error::Error;
use crate::Result;

/// Which inputs gradient descent is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyMode {
    Coords,
    Weights,
    Both,
}

impl ToyMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToyMode::Coords => "coords",
            ToyMode::Weights => "weights",
            ToyMode::Both => "both",
        }
    }
}

impl FromStr for ToyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coords" => Ok(ToyMode::Coords),
            "weights" => Ok(ToyMode::Weights),
            "both" => Ok(ToyMode::Both),
            other => Err(Error::invalid_config(format!(
                "unknown toy mode {other:?} (expected coords, weights or both)"
            ))),
        }
    }
}

/// Configuration of one toy run.
#[derive(Debug, Clone)]
pub struct ToyConfig {
    pub mode: ToyMode,
    /// Explicit initial points; `None` auto-generates from the seed.
    pub points: Option<WeightedPointSet>,
    /// Target line (two coefficients).
    pub target: CurveParams,
    pub lr: f64,
    pub steps: usize,
    /// Loss horizon.
    pub t: f64,
    /// Drives the y-perturbations when points are auto-generated.
    pub seed: u64,
    /// Auto-generated point count.
    pub num_points: usize,
    /// Amplitude of the uniform y-perturbation around the target line.
    pub perturbation: f64,
}

impl ToyConfig {
    /// The committed default instance for a mode: 8 points equally spaced
    /// on [0, 1], y perturbed off the target line 0.2 + 0.5x, unit weights.
    /// Learning rates are per mode (tuned so 200 steps converge).
    pub fn default_for(mode: ToyMode) -> Self {
        let lr = match mode {
            ToyMode::Coords => 0.5,
            ToyMode::Weights => 1.0,
            ToyMode::Both => 0.5,
        };
        ToyConfig {
            mode,
            points: None,
            target: CurveParams::new(vec![0.2, 0.5]).expect("valid line"),
            lr,
            steps: 200,
            t: 1.0,
            seed: 7,
            num_points: 8,
            perturbation: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::invalid_config(format!("toy.lr must be > 0, got {}", self.lr)));
        }
        if !self.t.is_finite() || self.t <= 0.0 {
            return Err(Error::invalid_config(format!("toy.t must be > 0, got {}", self.t)));
        }
        if self.target.n() != 2 {
            return Err(Error::invalid_config(format!(
                "toy.target must be a line (2 coefficients), got {}",
                self.target.n()
            )));
        }
        if self.points.is_none() && self.num_points < 2 {
            return Err(Error::invalid_config(format!(
                "toy.points needs at least 2 auto-generated points, got {}",
                self.num_points
            )));
        }
        if !self.perturbation.is_finite() || self.perturbation < 0.0 {
            return Err(Error::invalid_config(format!(
                "toy.perturbation must be ≥ 0, got {}",
                self.perturbation
            )));
        }
        Ok(())
    }

    /// The initial state: explicit points if given, otherwise the seeded
    /// default instance.
    pub fn initial_points(&self) -> Result<WeightedPointSet> {
        if let Some(p) = &self.points {
            return Ok(p.clone());
        }
        let m = self.num_points;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let xs: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| self.target.evaluate(x) + rng.gen_range(-self.perturbation..=self.perturbation))
            .collect();
        Ok(WeightedPointSet::unweighted(xs, ys)?)
    }
}

/// State snapshot after `step` updates, with the fit evaluated there.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub loss: f64,
    pub beta: CurveParams,
    pub points: WeightedPointSet,
}

/// Records for steps 0..=steps (the initial state included).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn final_loss(&self) -> f64 {
        self.records.last().expect("non-empty by construction").loss
    }

    /// CSV with one row per record: step, loss, beta0, beta1, then the full
    /// point state (x_0…, y_0…, w_0…).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let m = self.records[0].points.len();
        write!(out, "step,loss,beta0,beta1")?;
        for i in 0..m {
            write!(out, ",x_{i}")?;
        }
        for i in 0..m {
            write!(out, ",y_{i}")?;
        }
        for i in 0..m {
            write!(out, ",w_{i}")?;
        }
        writeln!(out)?;
        for rec in &self.records {
            write!(out, "{},{}", rec.step, rec.loss)?;
            write!(out, ",{},{}", rec.beta.coeffs()[0], rec.beta.coeffs()[1])?;
            for v in rec.points.xs() {
                write!(out, ",{v}")?;
            }
            for v in rec.points.ys() {
                write!(out, ",{v}")?;
            }
            for v in rec.points.ws() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Fits the current state, evaluates the loss and applies one descent
/// update. Returns the updated state plus the loss and fitted line of the
/// *input* state.
pub fn toy_step(state: &WeightedPointSet, cfg: &ToyConfig) -> Result<(WeightedPointSet, f64, CurveParams)> {
    cfg.validate()?;
    step_inner(state, cfg, 0)
}

fn fit_and_loss(state: &WeightedPointSet, cfg: &ToyConfig, step: usize) -> Result<(f64, CurveParams, curvefit::FitContext, curvefit::UpstreamGrad)> {
    let (beta, ctx) = solve_weighted_ls(state, 2)?;
    let (loss, up) = geometric_loss_line(&beta, &cfg.target, &LossConfig::with_t(cfg.t))?;
    if !loss.is_finite() {
        return Err(Error::DivergedState { step, quantity: "loss" });
    }
    Ok((loss, beta, ctx, up))
}

fn step_inner(state: &WeightedPointSet, cfg: &ToyConfig, step: usize) -> Result<(WeightedPointSet, f64, CurveParams)> {
    let (loss, beta, ctx, up) = fit_and_loss(state, cfg, step)?;
    let grads = backward_fit(&ctx, &up)?;

    let mut xs = state.xs().to_vec();
    let mut ys = state.ys().to_vec();
    let mut ws = state.ws().to_vec();
    let move_coords = matches!(cfg.mode, ToyMode::Coords | ToyMode::Both);
    let move_weights = matches!(cfg.mode, ToyMode::Weights | ToyMode::Both);

    if move_coords {
        for i in 0..xs.len() {
            xs[i] -= cfg.lr * grads.d_x[i];
            ys[i] -= cfg.lr * grads.d_y[i];
        }
    }
    if move_weights {
        for (w, d) in ws.iter_mut().zip(&grads.d_w) {
            // descend in u with w = u²: ∂L/∂u = 2u·∂L/∂w
            let u = w.sqrt();
            let u_next = u - cfg.lr * 2.0 * u * d;
            *w = u_next * u_next;
        }
    }
    for (quantity, values) in [("x-coordinate", &xs), ("y-coordinate", &ys), ("weight", &ws)] {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedState { step, quantity });
        }
    }
    let next = WeightedPointSet::new(xs, ys, ws)?;
    Ok((next, loss, beta))
}

/// A fit that degenerates after the descent has already moved the state
/// means the optimization drove the points somewhere unfittable; report it
/// as divergence. At step 0 the state is still the user's input, so the
/// raw fit error passes through.
fn map_degenerate(err: Error, step: usize) -> Error {
    if step > 0 && err.is_degenerate_fit() {
        Error::DivergedState { step, quantity: "fit system" }
    } else {
        err
    }
}

/// Runs the full descent, recording every state including the initial one
/// (`steps + 1` records; `steps = 0` just evaluates the initial fit).
pub fn run_toy(cfg: &ToyConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut state = cfg.initial_points()?;
    let mut records = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        if step == cfg.steps {
            let (loss, beta, _, _) = fit_and_loss(&state, cfg, step).map_err(|e| map_degenerate(e, step))?;
            records.push(TrajectoryRecord { step, loss, beta, points: state.clone() });
            break;
        }
        let (next, loss, beta) = step_inner(&state, cfg, step).map_err(|e| map_degenerate(e, step))?;
        records.push(TrajectoryRecord { step, loss, beta, points: state.clone() });
        state = next;
    }
    Ok(Trajectory { records })
}
