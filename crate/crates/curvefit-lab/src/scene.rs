//! Synthetic lane scenes: curve markings rendered into a small image
//! through a known road-view homography.
//!
//! Geometry conventions, fixed across the whole crate:
//!
//! * Image pixels live on a H×W grid; pixel `(r, c)` has normalized image
//!   coordinates `x = c/(W−1)`, `y = r/(H−1)` — `(0,0)` top-left, `(1,1)`
//!   bottom-right.
//! * The scene homography maps *image → ortho*. In the ortho frame the
//!   first coordinate `u` is longitudinal (0 near, `t` far) and the second
//!   `v` lateral; ground-truth curves are parabolas `v = c + b·u + a·u²`.
//! * Rendering projects ortho samples back through the inverse homography
//!   and stamps discs in pixel space, so marking pixels lie on the true
//!   curve up to the stroke half-thickness.
//!
//! Scene content (dash phases, stroke jitter, distractor blobs, noise) is
//! drawn from a ChaCha stream seeded per scene: the same seed and config
//! reproduce the same bytes anywhere.

use curvefit::{CurveParams, Homography};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};

use crate::error::Error;
use crate::Result;

/// Row-major H×W image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(h: usize, w: usize) -> Self {
        Grid { h, w, data: vec![0.0; h * w] }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.w + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.w + c] = v;
    }

    /// Clamped lookup: out-of-range indices snap to the border pixel.
    pub fn get_clamped(&self, r: isize, c: isize) -> f64 {
        let r = r.clamp(0, self.h as isize - 1) as usize;
        let c = c.clamp(0, self.w as isize - 1) as usize;
        self.get(r, c)
    }

    /// Row-major values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Normalized x of column `c`.
    pub fn norm_x(&self, c: usize) -> f64 {
        c as f64 / (self.w - 1) as f64
    }

    /// Normalized y of row `r`.
    pub fn norm_y(&self, r: usize) -> f64 {
        r as f64 / (self.h - 1) as f64
    }
}

/// Dash pattern along the curve, in longitudinal (u) units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DashSpec {
    pub on: f64,
    pub off: f64,
}

/// Bright round blobs that look like markings locally but lie off the
/// curves. `count`, `radius` (pixels) and `intensity` are sampled per scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistractorSpec {
    pub count: (usize, usize),
    pub radius: (f64, f64),
    pub intensity: (f64, f64),
}

/// Everything that defines a scene family; the per-scene seed picks the
/// member.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    /// Number of curves (lane lines).
    pub k: usize,
    /// Longitudinal horizon: curves span u ∈ [0, t].
    pub t: f64,
    /// Image → ortho homography, row-major.
    pub homography: [f64; 9],
    /// Amplitude of additive uniform pixel noise.
    pub noise: f64,
    pub marking_intensity: (f64, f64),
    /// Stroke half-thickness range in pixels (jittered per dash).
    pub half_thickness: (f64, f64),
    pub dash: Option<DashSpec>,
    pub distractors: Option<DistractorSpec>,
    /// Outermost curve offset at u = 0; curve k sits at an evenly spaced
    /// base offset in [−span, span].
    pub lateral_span: f64,
    pub offset_jitter: f64,
    pub slope_max: f64,
    pub curvature_max: f64,
}

/// The committed road-view homography: a mild perspective whose
/// denominator 0.8y + 0.6 stays within [0.6, 1.4] on the unit square, so
/// every grid pixel transforms safely. Bottom of the image is u = 0,
/// top is u = 1; the visible lateral window widens with distance.
pub const ROAD_VIEW_HOMOGRAPHY: [f64; 9] = [0.0, -0.6, 0.6, 0.5, 0.0, -0.25, 0.0, 0.8, 0.6];

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            height: 64,
            width: 128,
            k: 2,
            t: 1.0,
            homography: ROAD_VIEW_HOMOGRAPHY,
            noise: 0.02,
            marking_intensity: (0.85, 1.0),
            half_thickness: (0.8, 1.4),
            dash: Some(DashSpec { on: 0.10, off: 0.05 }),
            distractors: Some(DistractorSpec {
                count: (1, 2),
                radius: (2.5, 4.0),
                intensity: (0.55, 0.8),
            }),
            lateral_span: 0.10,
            offset_jitter: 0.025,
            slope_max: 0.015,
            curvature_max: 0.025,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < min || hi > max {
        return Err(Error::invalid_config(format!(
            "{name} must be an ordered range within [{min}, {max}], got ({lo}, {hi})"
        )));
    }
    Ok(())
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 16 || self.width < 16 {
            return Err(Error::invalid_config(format!(
                "scene grid must be at least 16×16, got {}×{}",
                self.height, self.width
            )));
        }
        if self.k == 0 {
            return Err(Error::invalid_config("scene needs at least one curve"));
        }
        if !self.t.is_finite() || self.t <= 0.0 {
            return Err(Error::invalid_config(format!("scene horizon t must be > 0, got {}", self.t)));
        }
        Homography::new(self.homography).map_err(Error::Fit)?;
        if !self.noise.is_finite() || self.noise < 0.0 || self.noise >= 0.5 {
            return Err(Error::invalid_config(format!(
                "noise must be in [0, 0.5), got {}",
                self.noise
            )));
        }
        check_range("marking_intensity", self.marking_intensity, 0.05, 1.0)?;
        check_range("half_thickness", self.half_thickness, 0.3, 8.0)?;
        if let Some(d) = self.dash {
            if !(d.on > 0.0 && d.off >= 0.0 && d.on.is_finite() && d.off.is_finite()) {
                return Err(Error::invalid_config(format!(
                    "dash lengths must be positive (on) and non-negative (off), got on={} off={}",
                    d.on, d.off
                )));
            }
        }
        if let Some(d) = self.distractors {
            if d.count.0 > d.count.1 {
                return Err(Error::invalid_config("distractor count range is inverted"));
            }
            check_range("distractor radius", d.radius, 0.5, 16.0)?;
            check_range("distractor intensity", d.intensity, 0.05, 1.0)?;
        }
        for (name, v, max) in [
            ("lateral_span", self.lateral_span, 0.4),
            ("offset_jitter", self.offset_jitter, 0.2),
            ("slope_max", self.slope_max, 0.2),
            ("curvature_max", self.curvature_max, 0.2),
        ] {
            if !v.is_finite() || v < 0.0 || v > max {
                return Err(Error::invalid_config(format!(
                    "{name} must be in [0, {max}], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A rendered distractor blob, in pixel coordinates. Kept on the scene so
/// robustness checks can measure how much weight lands on it; not part of
/// the serialized format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
}

/// One generated scene.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    /// Ground-truth parabolas in the ortho frame, one per curve.
    pub gt: Vec<CurveParams>,
    pub image: Grid,
    /// Image → ortho.
    pub homography: Homography,
    pub seed: u64,
    pub noise: f64,
    pub distractors: Vec<Blob>,
}

/// Projects `samples` evenly spaced curve points over `u ∈ [0, t]` into
/// pixel coordinates: `(u, row, col)`. `hinv` is the ortho → image map
/// (the inverse of a scene homography). Points that project near infinity
/// are dropped.
pub fn curve_track(
    curve: &CurveParams,
    hinv: &Homography,
    h: usize,
    w: usize,
    t: f64,
    samples: usize,
) -> Vec<(f64, f64, f64)> {
    let mut track = Vec::with_capacity(samples);
    for s in 0..samples {
        let u = t * s as f64 / (samples - 1) as f64;
        let v = curve.evaluate(u);
        if let Some((x, y)) = hinv.map_point(u, v) {
            let fc = x * (w - 1) as f64;
            let fr = y * (h - 1) as f64;
            track.push((u, fr, fc));
        }
    }
    track
}

pub(crate) fn stamp_disc(image: &mut Grid, fr: f64, fc: f64, radius: f64, intensity: f64) {
    let r0 = ((fr - radius).floor().max(0.0)) as usize;
    let r1 = ((fr + radius).ceil().min(image.h() as f64 - 1.0)) as usize;
    let c0 = ((fc - radius).floor().max(0.0)) as usize;
    let c1 = ((fc + radius).ceil().min(image.w() as f64 - 1.0)) as usize;
    if r0 > r1 || c0 > c1 {
        return;
    }
    let r2 = radius * radius;
    for r in r0..=r1 {
        for c in c0..=c1 {
            let dr = r as f64 - fr;
            let dc = c as f64 - fc;
            if dr * dr + dc * dc <= r2 {
                let v = image.get(r, c).max(intensity);
                image.set(r, c, v);
            }
        }
    }
}

fn unif(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// In-view margin for the normalized image x of projected curve samples.
const VIEW_MARGIN: f64 = 0.03;

fn curve_in_view(curve: &CurveParams, hinv: &Homography, t: f64) -> bool {
    const PROBES: usize = 33;
    for s in 0..PROBES {
        let u = t * s as f64 / (PROBES - 1) as f64;
        let v = curve.evaluate(u);
        match hinv.map_point(u, v) {
            Some((x, y)) => {
                if !(VIEW_MARGIN..=1.0 - VIEW_MARGIN).contains(&x) || !(-0.02..=1.02).contains(&y) {
                    return false;
                }
            }
            None => return false,
        }
    }
    true
}

/// Generates one scene. Fully determined by `(seed, cfg)`.
pub fn generate_scene(seed: u64, cfg: &SceneConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let hom = Homography::new(cfg.homography).map_err(Error::Fit)?;
    let hinv = hom.inverse().map_err(Error::Fit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, k) = (cfg.height, cfg.width, cfg.k);

    // Ground-truth curves: evenly spaced base offsets, jittered, kept in view.
    let mut gt = Vec::with_capacity(k);
    for ki in 0..k {
        let base = if k == 1 {
            0.0
        } else {
            -cfg.lateral_span + 2.0 * cfg.lateral_span * ki as f64 / (k - 1) as f64
        };
        let mut accepted = None;
        for _ in 0..100 {
            let c0 = base + unif(&mut rng, (-cfg.offset_jitter, cfg.offset_jitter));
            let b = unif(&mut rng, (-cfg.slope_max, cfg.slope_max));
            let a = unif(&mut rng, (-cfg.curvature_max, cfg.curvature_max));
            let curve = CurveParams::new(vec![c0, b, a]).map_err(Error::Fit)?;
            if curve_in_view(&curve, &hinv, cfg.t) {
                accepted = Some(curve);
                break;
            }
        }
        gt.push(accepted.ok_or_else(|| {
            Error::invalid_config(
                "could not sample an in-view curve; lateral ranges too wide for the homography",
            )
        })?);
    }

    // Markings.
    let samples = 4 * h.max(w);
    let mut image = Grid::zeros(h, w);
    let tracks: Vec<Vec<(f64, f64, f64)>> = gt
        .iter()
        .map(|c| curve_track(c, &hinv, h, w, cfg.t, samples))
        .collect();
    for track in &tracks {
        match cfg.dash {
            Some(dash) => {
                let period = dash.on + dash.off;
                let phase = rng.gen_range(0.0..period);
                let n_dashes = ((cfg.t + phase) / period).ceil() as usize + 1;
                let styles: Vec<(f64, f64)> = (0..n_dashes)
                    .map(|_| {
                        (
                            unif(&mut rng, cfg.marking_intensity),
                            unif(&mut rng, cfg.half_thickness),
                        )
                    })
                    .collect();
                for &(u, fr, fc) in track {
                    let local = u + phase;
                    let idx = (local / period) as usize;
                    if local - idx as f64 * period < dash.on {
                        let (intensity, ht) = styles[idx.min(styles.len() - 1)];
                        stamp_disc(&mut image, fr, fc, ht, intensity);
                    }
                }
            }
            None => {
                let intensity = unif(&mut rng, cfg.marking_intensity);
                let ht = unif(&mut rng, cfg.half_thickness);
                for &(_, fr, fc) in track {
                    stamp_disc(&mut image, fr, fc, ht, intensity);
                }
            }
        }
    }

    // Distractor blobs, kept clear of every curve.
    let mut distractors = Vec::new();
    if let Some(spec) = cfg.distractors {
        let count = if spec.count.0 == spec.count.1 {
            spec.count.0
        } else {
            rng.gen_range(spec.count.0..=spec.count.1)
        };
        let clearance = cfg.half_thickness.1 + 3.0;
        for _ in 0..count {
            let radius = unif(&mut rng, spec.radius);
            let intensity = unif(&mut rng, spec.intensity);
            for _ in 0..100 {
                let fr = rng.gen_range(0.12 * h as f64..0.88 * h as f64);
                let fc = rng.gen_range(0.08 * w as f64..0.92 * w as f64);
                let near = tracks.iter().flatten().any(|&(_, tr, tc)| {
                    let (dr, dc) = (fr - tr, fc - tc);
                    dr * dr + dc * dc < (radius + clearance) * (radius + clearance)
                });
                if !near {
                    stamp_disc(&mut image, fr, fc, radius, intensity);
                    distractors.push(Blob { row: fr, col: fc, radius });
                    break;
                }
            }
        }
    }

    // Additive noise, row-major, clamped into [0, 1].
    if cfg.noise > 0.0 {
        for r in 0..h {
            for c in 0..w {
                let v = image.get(r, c) + rng.gen_range(-cfg.noise..=cfg.noise);
                image.set(r, c, v.clamp(0.0, 1.0));
            }
        }
    }

    Ok(SyntheticScene { gt, image, homography: hom, seed, noise: cfg.noise, distractors })
}

/// Generates `count` scenes with consecutive seeds starting at `seed0`.
pub fn generate_scene_set(seed0: u64, count: usize, cfg: &SceneConfig) -> Result<Vec<SyntheticScene>> {
    (0..count)
        .map(|i| generate_scene(seed0 + i as u64, cfg))
        .collect()
}

const MAGIC: &[u8; 5] = b"LSIM1";

/// Serializes a scene: magic `LSIM1`; H, W, K as u32 little-endian; the
/// image grid row-major as f64 little-endian; K×3 ground-truth
/// coefficients (constant term first); the 9 homography entries row-major.
pub fn write_scene<W: Write>(scene: &SyntheticScene, out: &mut W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(scene.image.h() as u32).to_le_bytes())?;
    out.write_all(&(scene.image.w() as u32).to_le_bytes())?;
    out.write_all(&(scene.gt.len() as u32).to_le_bytes())?;
    for v in scene.image.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    for curve in &scene.gt {
        for v in curve.coeffs() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for v in scene.homography.entries() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::SceneFormat(format!("truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::SceneFormat(format!("truncated while reading {what}")))?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a scene written by [`write_scene`]. The format does not carry
/// seed, noise level or distractor metadata; those come back zeroed/empty.
pub fn read_scene<R: Read>(input: &mut R) -> Result<SyntheticScene> {
    let mut magic = [0u8; 5];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::SceneFormat("missing magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::SceneFormat(format!(
            "bad magic {:?} (expected {:?})",
            magic, MAGIC
        )));
    }
    let h = read_u32(input, "height")? as usize;
    let w = read_u32(input, "width")? as usize;
    let k = read_u32(input, "curve count")? as usize;
    if h < 16 || w < 16 || h * w > (1 << 24) {
        return Err(Error::SceneFormat(format!("implausible grid size {h}×{w}")));
    }
    if k == 0 || k > 64 {
        return Err(Error::SceneFormat(format!("implausible curve count {k}")));
    }
    let mut image = Grid::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let v = read_f64(input, "pixel")?;
            if !v.is_finite() {
                return Err(Error::SceneFormat(format!("non-finite pixel at ({r}, {c})")));
            }
            image.set(r, c, v);
        }
    }
    let mut gt = Vec::with_capacity(k);
    for _ in 0..k {
        let mut coeffs = Vec::with_capacity(3);
        for _ in 0..3 {
            coeffs.push(read_f64(input, "curve coefficient")?);
        }
        gt.push(
            CurveParams::new(coeffs)
                .map_err(|e| Error::SceneFormat(format!("bad curve coefficients: {e}")))?,
        );
    }
    let mut hm = [0.0; 9];
    for v in hm.iter_mut() {
        *v = read_f64(input, "homography entry")?;
    }
    let homography = Homography::new(hm)
        .map_err(|e| Error::SceneFormat(format!("bad homography: {e}")))?;
    Ok(SyntheticScene { gt, image, homography, seed: 0, noise: 0.0, distractors: Vec::new() })
}
