//! Adaptive per-pixel Gaussian-mixture background model on 8-bit grayscale.
//!
//! Per pixel and frame, with sample `x`:
//!
//! 1. Classify against the model as it stands: the matched component is the
//!    one with smallest `(x-μ)²/σ²` among those with `(x-μ)² ≤ T·σ²`
//!    (lowest index on ties). Components are ranked by `ω/σ` descending; a
//!    component is background while the weight ranked before it is below
//!    `1 - c_f`. The pixel is background iff it matched a background component.
//! 2. Every component: `ω ← ω + α(o - ω) - α·c_T`, with `o = 1` for the
//!    matched one. The matched component moves with step `α/ω` (its weight
//!    after the `o` term): `μ ← μ + s(x-μ)`, `σ² ← σ² + s((x-μ_old)² - σ²)`,
//!    clamped to `[σ²_min, σ²_max]`.
//! 3. Drop components with `ω ≤ 0`. Without a match, append `(α, x, σ²_init)`,
//!    or replace the lowest-weight component when `K` are in use.
//! 4. Renormalize weights to sum to 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmParams {
    pub max_components: usize,
    /// Learning rate is `1 / history`.
    pub history: u32,
    pub var_threshold: f64,
    pub background_ratio: f64,
    /// Multiplied by the learning rate to form the per-frame weight decrement.
    pub complexity_prior: f64,
    pub var_init: f64,
    pub var_min: f64,
    pub var_max: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            max_components: 5,
            history: 500,
            var_threshold: 16.0,
            background_ratio: 0.1,
            complexity_prior: 0.05,
            var_init: 225.0,
            var_min: 4.0,
            var_max: 5.0 * 225.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GmmError {
    #[error("frame is {got_w}x{got_h}, model is {want_w}x{want_h}")]
    DimensionMismatch {
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("invalid GMM parameters: {0}")]
    InvalidParams(String),
}

impl GmmParams {
    pub fn alpha(&self) -> f64 {
        1.0 / self.history as f64
    }

    pub fn validate(&self) -> Result<(), GmmError> {
        let bad = |m: &str| Err(GmmError::InvalidParams(m.to_string()));
        if self.max_components == 0 || self.max_components > 255 {
            return bad("max_components must be in 1..=255");
        }
        if self.history == 0 {
            return bad("history must be positive");
        }
        if !(self.var_threshold > 0.0) {
            return bad("var_threshold must be positive");
        }
        if !(0.0..1.0).contains(&self.background_ratio) {
            return bad("background_ratio must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.complexity_prior) {
            return bad("complexity_prior must be in [0, 1)");
        }
        if !(self.var_min > 0.0 && self.var_min <= self.var_init && self.var_init <= self.var_max) {
            return bad("need 0 < var_min <= var_init <= var_max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl ForegroundMask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn ratio(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.bits.len() as f64
        }
    }
}

/// Mixture state for a whole frame, stored structure-of-arrays with `K`
/// slots per pixel; slots `0..count[p]` are live.
#[derive(Debug, Clone)]
pub struct GmmModel {
    params: GmmParams,
    width: u32,
    height: u32,
    count: Vec<u8>,
    weight: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl GmmModel {
    pub fn new(width: u32, height: u32, params: GmmParams) -> Result<Self, GmmError> {
        params.validate()?;
        let n = width as usize * height as usize;
        let k = params.max_components;
        Ok(Self {
            params,
            width,
            height,
            count: vec![0; n],
            weight: vec![0.0; n * k],
            mean: vec![0.0; n * k],
            var: vec![0.0; n * k],
        })
    }

    pub fn params(&self) -> &GmmParams {
        &self.params
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Live `(weight, mean, variance)` components of pixel `p`.
    pub fn components(&self, p: usize) -> Vec<(f64, f64, f64)> {
        let k = self.params.max_components;
        (0..self.count[p] as usize)
            .map(|m| (self.weight[p * k + m], self.mean[p * k + m], self.var[p * k + m]))
            .collect()
    }

    pub fn update(&mut self, width: u32, height: u32, pixels: &[u8]) -> Result<ForegroundMask, GmmError> {
        if (width, height) != (self.width, self.height) || pixels.len() != self.count.len() {
            return Err(GmmError::DimensionMismatch {
                got_w: width,
                got_h: height,
                want_w: self.width,
                want_h: self.height,
            });
        }
        let bits = pixels
            .iter()
            .enumerate()
            .map(|(p, &v)| self.update_pixel(p, v as f64))
            .collect();
        Ok(ForegroundMask {
            width,
            height,
            bits,
        })
    }

    fn update_pixel(&mut self, p: usize, x: f64) -> bool {
        let prm = self.params;
        let k = prm.max_components;
        let alpha = prm.alpha();
        let base = p * k;
        let n = self.count[p] as usize;
        let w = &mut self.weight[base..base + k];
        let mu = &mut self.mean[base..base + k];
        let var = &mut self.var[base..base + k];

        let mut best: Option<usize> = None;
        let mut best_d = f64::INFINITY;
        for m in 0..n {
            let d = x - mu[m];
            let d2 = d * d;
            if d2 <= prm.var_threshold * var[m] {
                let maha = d2 / var[m];
                if maha < best_d {
                    best_d = maha;
                    best = Some(m);
                }
            }
        }

        let foreground = match best {
            None => true,
            Some(b) => {
                let mut rank: Vec<usize> = (0..n).collect();
                let score = |m: usize| w[m] / var[m].sqrt();
                rank.sort_by(|&a, &c| score(c).total_cmp(&score(a)).then(a.cmp(&c)));
                let mut before = 0.0;
                let mut is_bg = false;
                for &m in &rank {
                    if m == b {
                        is_bg = before < 1.0 - prm.background_ratio;
                        break;
                    }
                    before += w[m];
                }
                !is_bg
            }
        };

        let decay = alpha * prm.complexity_prior;
        for m in 0..n {
            let own = if best == Some(m) { 1.0 } else { 0.0 };
            let lifted = w[m] + alpha * (own - w[m]);
            if best == Some(m) {
                let step = alpha / lifted;
                let d = x - mu[m];
                mu[m] += step * d;
                var[m] = (var[m] + step * (d * d - var[m])).clamp(prm.var_min, prm.var_max);
            }
            w[m] = lifted - decay;
        }

        let mut live = 0;
        for m in 0..n {
            if w[m] > 0.0 {
                w[live] = w[m];
                mu[live] = mu[m];
                var[live] = var[m];
                live += 1;
            }
        }

        if best.is_none() {
            let slot = if live < k {
                live += 1;
                live - 1
            } else {
                let mut weakest = 0;
                for m in 1..live {
                    if w[m] < w[weakest] {
                        weakest = m;
                    }
                }
                weakest
            };
            w[slot] = alpha;
            mu[slot] = x;
            var[slot] = prm.var_init;
        }

        let total: f64 = w[..live].iter().sum();
        for wm in &mut w[..live] {
            *wm /= total;
        }
        self.count[p] = live as u8;
        foreground
    }
}
