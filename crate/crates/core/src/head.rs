//! Lightweight ranking head: a one-hidden-layer MLP over frozen feature
//! vectors with a per-item score output and an antisymmetric pairwise logit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{HeadConfig, HeadOptimizer};
use crate::error::{Error, Result};
use crate::types::IndexedComparison;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of `σ(logit)` against `y`.
pub fn bce_from_logit(logit: f64, y: f64) -> f64 {
    softplus(logit) - y * logit
}

/// Flat parameter vector layout:
/// `W₁ (H×D, row-major) | b₁ (H) | w_r (H) | b_r | w_p (H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
    /// Mean data loss over the last training epoch; 1.0 before any training.
    pub training_loss: f64,
    pub version: u64,
}

/// Loss split into its terms, each averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub score_i: f64,
    pub score_j: f64,
    pub pair: f64,
    pub reg: f64,
}

impl LossParts {
    pub fn data(&self) -> f64 {
        self.score_i + self.score_j + self.pair
    }

    pub fn total(&self) -> f64 {
        self.data() + self.reg
    }
}

struct Forward {
    h: Vec<f64>,
    r: f64,
}

impl HeadModel {
    /// Random hidden layer, zero output layers.
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (input_dim.max(1) as f64).sqrt();
        let mut params = vec![0.0; hidden * input_dim + 3 * hidden + 1];
        for w in &mut params[..hidden * input_dim] {
            *w = rng.gen_range(-bound..bound);
        }
        Self {
            input_dim,
            hidden,
            params,
            training_loss: 1.0,
            version: 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn offsets(&self) -> (usize, usize, usize, usize) {
        let b1 = self.hidden * self.input_dim;
        let wr = b1 + self.hidden;
        let br = wr + self.hidden;
        (b1, wr, br, br + 1)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.input_dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            })
        }
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let (b1, wr, br, _) = self.offsets();
        let d = self.input_dim;
        let h: Vec<f64> = (0..self.hidden)
            .map(|u| {
                let row = &self.params[u * d..(u + 1) * d];
                let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.params[b1 + u];
                a.tanh()
            })
            .collect();
        let r = h.iter().zip(&self.params[wr..br]).map(|(a, w)| a * w).sum::<f64>() + self.params[br];
        Forward { h, r }
    }

    fn pair_logit(&self, hi: &[f64], hj: &[f64]) -> f64 {
        let (_, _, _, wp) = self.offsets();
        hi.iter()
            .zip(hj)
            .zip(&self.params[wp..])
            .map(|((a, b), w)| (a - b) * w)
            .sum()
    }

    /// Regression score `s ∈ [0, 1]`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(sigmoid(self.forward(x).r))
    }

    /// Pairwise logit `ℓ_ij`, antisymmetric in its arguments.
    pub fn logit(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        self.check(xi)?;
        self.check(xj)?;
        Ok(self.pair_logit(&self.forward(xi).h, &self.forward(xj).h))
    }

    /// `(σ(ℓ_ij), |s_i − s_j|·(1 − loss))`.
    pub fn pair(&self, xi: &[f64], xj: &[f64]) -> Result<(f64, f64)> {
        self.check(xi)?;
        self.check(xj)?;
        let (fi, fj) = (self.forward(xi), self.forward(xj));
        let p = sigmoid(self.pair_logit(&fi.h, &fj.h));
        let c = (sigmoid(fi.r) - sigmoid(fj.r)).abs() * (1.0 - self.training_loss.clamp(0.0, 1.0));
        Ok((p, c))
    }

    fn reg_value(&self, loss_reg: f64) -> f64 {
        loss_reg * self.params.iter().map(|w| w * w).sum::<f64>()
    }

    /// Loss over a batch and its gradient with respect to `params`.
    pub fn loss_and_grad(
        &self,
        features: &[Vec<f64>],
        batch: &[IndexedComparison],
        loss_reg: f64,
    ) -> (LossParts, Vec<f64>) {
        let (b1, wr, br, wp) = self.offsets();
        let d = self.input_dim;
        let hn = self.hidden;
        let mut grad: Vec<f64> = self.params.iter().map(|w| 2.0 * loss_reg * w).collect();
        let mut parts = LossParts {
            score_i: 0.0,
            score_j: 0.0,
            pair: 0.0,
            reg: self.reg_value(loss_reg),
        };
        if batch.is_empty() {
            return (parts, grad);
        }
        let scale = 1.0 / batch.len() as f64;
        for c in batch {
            let y = if c.first_wins { 1.0 } else { 0.0 };
            let (xi, xj) = (&features[c.i], &features[c.j]);
            let (fi, fj) = (self.forward(xi), self.forward(xj));
            let l = self.pair_logit(&fi.h, &fj.h);
            let w = c.weight * scale;
            parts.score_i += w * 0.5 * bce_from_logit(fi.r, y);
            parts.score_j += w * 0.5 * bce_from_logit(fj.r, 1.0 - y);
            parts.pair += w * 0.5 * bce_from_logit(l, y);

            let d_ri = w * 0.5 * (sigmoid(fi.r) - y);
            let d_rj = w * 0.5 * (sigmoid(fj.r) - (1.0 - y));
            let d_l = w * 0.5 * (sigmoid(l) - y);
            grad[br] += d_ri + d_rj;
            for u in 0..hn {
                let (hi, hj) = (fi.h[u], fj.h[u]);
                grad[wr + u] += d_ri * hi + d_rj * hj;
                grad[wp + u] += d_l * (hi - hj);
                let g_hi = d_ri * self.params[wr + u] + d_l * self.params[wp + u];
                let g_hj = d_rj * self.params[wr + u] - d_l * self.params[wp + u];
                let g_ai = g_hi * (1.0 - hi * hi);
                let g_aj = g_hj * (1.0 - hj * hj);
                grad[b1 + u] += g_ai + g_aj;
                let row = &mut grad[u * d..(u + 1) * d];
                for ((g, a), b) in row.iter_mut().zip(xi).zip(xj) {
                    *g += g_ai * a + g_aj * b;
                }
            }
        }
        (parts, grad)
    }

    /// Mean loss over a dataset.
    pub fn loss(&self, features: &[Vec<f64>], data: &[IndexedComparison], loss_reg: f64) -> LossParts {
        self.loss_and_grad(features, data, loss_reg).0
    }
}

/// Trains a fresh model on the comparison log. Deterministic in
/// `(features, data, config, seed)`.
pub fn train_head(
    features: &[Vec<f64>],
    data: &[IndexedComparison],
    config: &HeadConfig,
    seed: u64,
    version: u64,
) -> HeadModel {
    let dim = features.first().map_or(0, |f| f.len());
    let mut model = HeadModel::new(dim, config.hidden, seed);
    model.version = version;
    if data.is_empty() {
        return model;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let n_params = model.params.len();
    let mut m1 = vec![0.0; n_params];
    let mut m2 = vec![0.0; n_params];
    let mut step = 0i32;
    let batch_size = config.batch_size.max(1);
    let mut epoch_loss = 1.0;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<IndexedComparison> = chunk.iter().map(|&k| data[k]).collect();
            let (parts, grad) = model.loss_and_grad(features, &batch, config.loss_reg);
            total += parts.data() * batch.len() as f64;
            step += 1;
            match config.optimizer {
                HeadOptimizer::Sgd => {
                    for (w, g) in model.params.iter_mut().zip(&grad) {
                        *w -= config.learning_rate * g;
                    }
                }
                HeadOptimizer::Adam => {
                    let c1 = 1.0 - ADAM_BETA1.powi(step);
                    let c2 = 1.0 - ADAM_BETA2.powi(step);
                    for k in 0..n_params {
                        m1[k] = ADAM_BETA1 * m1[k] + (1.0 - ADAM_BETA1) * grad[k];
                        m2[k] = ADAM_BETA2 * m2[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
                        model.params[k] -= config.learning_rate * (m1[k] / c1) / ((m2[k] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
        epoch_loss = total / data.len() as f64;
    }
    model.training_loss = epoch_loss;
    model
}
