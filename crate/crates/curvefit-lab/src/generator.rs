//! A deliberately tiny learnable weight generator.
//!
//! For every pixel it computes a per-curve score from a linear model over
//! local image features; the fitting weight is the squared score. This is
//! just enough capacity to separate thin bright markings from fat blobs
//! (via center-minus-neighborhood contrasts) while keeping the training
//! loop analytic and fast — the point of the experiments is the loss being
//! backpropagated, not the feature extractor.

use curvefit::{Error as FitError, WeightedPointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::scene::Grid;
use crate::Result;

/// Per-pixel features: center value, the 8 neighbors (row-major order,
/// clamped at borders), then normalized x and y.
pub const FEATURES: usize = 11;
/// Linear coefficients plus a bias term.
pub const PARAMS_PER_MAP: usize = FEATURES + 1;

/// Fills `out` with the feature vector of pixel `(r, c)`.
pub fn pixel_features(image: &Grid, r: usize, c: usize, out: &mut [f64; FEATURES]) {
    let (ri, ci) = (r as isize, c as isize);
    let mut idx = 0;
    out[idx] = image.get(r, c);
    idx += 1;
    for dr in -1..=1 {
        for dc in -1..=1 {
            if (dr, dc) == (0, 0) {
                continue;
            }
            out[idx] = image.get_clamped(ri + dr, ci + dc);
            idx += 1;
        }
    }
    out[idx] = image.norm_x(c);
    out[idx + 1] = image.norm_y(r);
}

/// Linear per-pixel scorer producing `k` weight maps.
///
/// Parameters are stored flat, map-major: map `k` owns
/// `params[k * PARAMS_PER_MAP ..][..PARAMS_PER_MAP]`, the last entry of
/// each block being the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGenerator {
    k: usize,
    params: Vec<f64>,
}

impl WeightGenerator {
    pub fn new(k: usize, params: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid_config("generator needs at least one map"));
        }
        if params.len() != k * PARAMS_PER_MAP {
            return Err(Error::Fit(FitError::LengthMismatch {
                left: params.len(),
                right: k * PARAMS_PER_MAP,
            }));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid_config(format!("non-finite parameter {bad}")));
        }
        Ok(WeightGenerator { k, params })
    }

    pub fn zeros(k: usize) -> Self {
        WeightGenerator { k, params: vec![0.0; k * PARAMS_PER_MAP] }
    }

    /// Small random initialization, deterministic in `seed`.
    pub fn random_init(k: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..k * PARAMS_PER_MAP)
            .map(|_| rng.gen_range(-scale..=scale))
            .collect();
        WeightGenerator { k, params }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn block(&self, map: usize) -> &[f64] {
        &self.params[map * PARAMS_PER_MAP..(map + 1) * PARAMS_PER_MAP]
    }

    /// Raw score of pixel `(r, c)` under map `map`.
    pub fn score(&self, image: &Grid, map: usize, r: usize, c: usize) -> f64 {
        let mut feats = [0.0; FEATURES];
        pixel_features(image, r, c, &mut feats);
        let block = self.block(map);
        let mut s = block[FEATURES];
        for (f, p) in feats.iter().zip(block) {
            s += f * p;
        }
        s
    }

    /// Score map for one curve, row-major, pixel index `i = r·W + c`.
    pub fn scores(&self, image: &Grid, map: usize) -> Vec<f64> {
        assert!(map < self.k, "map index {map} out of range (k = {})", self.k);
        let mut out = Vec::with_capacity(image.h() * image.w());
        for r in 0..image.h() {
            for c in 0..image.w() {
                out.push(self.score(image, map, r, c));
            }
        }
        out
    }

    /// Weighted point set for one curve: every pixel contributes its
    /// normalized image coordinates with weight `score²`. The squaring
    /// keeps weights non-negative for any parameter values, so gradient
    /// steps can never produce an invalid set.
    pub fn forward_weights(&self, image: &Grid, map: usize) -> Result<(WeightedPointSet, Vec<f64>)> {
        let scores = self.scores(image, map);
        let mut xs = Vec::with_capacity(scores.len());
        let mut ys = Vec::with_capacity(scores.len());
        let mut ws = Vec::with_capacity(scores.len());
        for r in 0..image.h() {
            for c in 0..image.w() {
                xs.push(image.norm_x(c));
                ys.push(image.norm_y(r));
                ws.push(scores[r * image.w() + c].powi(2));
            }
        }
        let points = WeightedPointSet::new(xs, ys, ws).map_err(Error::Fit)?;
        Ok((points, scores))
    }

    /// Accumulates parameter gradients for map `map` given per-pixel
    /// score gradients: with `s = φᵀθ + bias`,
    /// `∂L/∂θ += Σ_i (∂L/∂s_i) · φ_i`.
    pub fn accumulate_score_grad(
        &self,
        image: &Grid,
        map: usize,
        d_scores: &[f64],
        grad: &mut [f64],
    ) {
        assert_eq!(d_scores.len(), image.h() * image.w());
        assert_eq!(grad.len(), self.params.len());
        let block = &mut grad[map * PARAMS_PER_MAP..(map + 1) * PARAMS_PER_MAP];
        let mut feats = [0.0; FEATURES];
        for r in 0..image.h() {
            for c in 0..image.w() {
                let pull = d_scores[r * image.w() + c];
                if pull == 0.0 {
                    continue;
                }
                pixel_features(image, r, c, &mut feats);
                for (g, f) in block.iter_mut().zip(feats.iter()) {
                    *g += pull * f;
                }
                block[FEATURES] += pull;
            }
        }
    }

    /// Accumulates parameter gradients for map `map` given per-pixel
    /// weight gradients: with `w = s²`, `∂L/∂s_i = 2 s_i · ∂L/∂w_i`.
    pub fn accumulate_param_grad(
        &self,
        image: &Grid,
        map: usize,
        scores: &[f64],
        d_weights: &[f64],
        grad: &mut [f64],
    ) {
        assert_eq!(d_weights.len(), scores.len());
        let d_scores: Vec<f64> = scores
            .iter()
            .zip(d_weights)
            .map(|(s, dw)| 2.0 * s * dw)
            .collect();
        self.accumulate_score_grad(image, map, &d_scores, grad);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_image() -> Grid {
        let mut g = Grid::zeros(16, 16);
        for r in 0..16 {
            for c in 0..16 {
                g.set(r, c, (r * 16 + c) as f64 / 255.0);
            }
        }
        g
    }

    #[test]
    fn features_are_center_neighbors_and_coords() {
        let g = ramp_image();
        let mut f = [0.0; FEATURES];
        pixel_features(&g, 5, 7, &mut f);
        assert_eq!(f[0], g.get(5, 7));
        assert_eq!(f[1], g.get(4, 6));
        assert_eq!(f[4], g.get(5, 6)); // west neighbor after the top row
        assert_eq!(f[8], g.get(6, 8));
        assert_eq!(f[9], 7.0 / 15.0);
        assert_eq!(f[10], 5.0 / 15.0);
    }

    #[test]
    fn border_features_clamp() {
        let g = ramp_image();
        let mut f = [0.0; FEATURES];
        pixel_features(&g, 0, 0, &mut f);
        // north-west neighbor clamps to the corner pixel itself
        assert_eq!(f[1], g.get(0, 0));
        assert_eq!(f[2], g.get(0, 0));
    }

    #[test]
    fn zero_generator_scores_zero_everywhere() {
        let gen = WeightGenerator::zeros(2);
        let g = ramp_image();
        assert!(gen.scores(&g, 1).iter().all(|&s| s == 0.0));
    }

    #[test]
    fn bias_only_generator_is_constant() {
        let mut params = vec![0.0; 2 * PARAMS_PER_MAP];
        params[PARAMS_PER_MAP - 1] = 0.7; // bias of map 0
        let gen = WeightGenerator::new(2, params).unwrap();
        let g = ramp_image();
        let (points, scores) = gen.forward_weights(&g, 0).unwrap();
        assert!(scores.iter().all(|&s| (s - 0.7).abs() < 1e-15));
        assert!(points.ws().iter().all(|&w| (w - 0.49).abs() < 1e-15));
        assert_eq!(points.len(), 256);
        // pixel i = r·W + c ordering
        assert_eq!(points.xs()[1], 1.0 / 15.0);
        assert_eq!(points.ys()[16], 1.0 / 15.0);
    }

    #[test]
    fn center_feature_scores_track_image() {
        let mut params = vec![0.0; PARAMS_PER_MAP];
        params[0] = 2.0;
        let gen = WeightGenerator::new(1, params).unwrap();
        let g = ramp_image();
        let scores = gen.scores(&g, 0);
        assert!((scores[17] - 2.0 * g.get(1, 1)).abs() < 1e-15);
    }

    #[test]
    fn param_grad_matches_finite_differences() {
        let g = ramp_image();
        let gen = WeightGenerator::random_init(1, 0.3, 11);
        // objective: Σ_i α_i w_i with fixed pseudo-random α
        let alphas: Vec<f64> = (0..256).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
        let objective = |gen: &WeightGenerator| -> f64 {
            let (points, _) = gen.forward_weights(&g, 0).unwrap();
            points.ws().iter().zip(&alphas).map(|(w, a)| w * a).sum()
        };
        let scores = gen.scores(&g, 0);
        let mut grad = vec![0.0; PARAMS_PER_MAP];
        gen.accumulate_param_grad(&g, 0, &scores, &alphas, &mut grad);
        let h = 1e-6;
        for (p, &analytic) in grad.iter().enumerate() {
            let mut plus = gen.clone();
            plus.params_mut()[p] += h;
            let mut minus = gen.clone();
            minus.params_mut()[p] -= h;
            let numeric = (objective(&plus) - objective(&minus)) / (2.0 * h);
            assert!(
                (analytic - numeric).abs() <= 1e-6 * numeric.abs().max(1.0),
                "param {p}: analytic {analytic} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn constructor_validates_shape() {
        assert!(WeightGenerator::new(0, vec![]).is_err());
        assert!(WeightGenerator::new(1, vec![0.0; 5]).is_err());
        assert!(WeightGenerator::new(1, vec![f64::NAN; PARAMS_PER_MAP]).is_err());
    }
}
