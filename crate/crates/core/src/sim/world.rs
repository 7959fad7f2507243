//! Synthetic items with known ground truth and a noisy comparison oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Item;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n: usize,
    pub feature_dim: usize,
    pub bins: usize,
    /// Probability ε that the oracle flips a judgment.
    pub oracle_noise: f64,
    /// Pairs closer than this in ground truth flip more often (only when ε > 0).
    pub margin: f64,
    /// Standard deviation η of the noise added to prompt scores.
    pub prior_noise: f64,
    /// Standard deviation of the noise added to features.
    pub feature_noise: f64,
    /// Probability that an item copies the ground-truth score of an earlier one.
    pub tie_prob: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n: 100,
            feature_dim: 8,
            bins: 5,
            oracle_noise: 0.0,
            margin: 0.02,
            prior_noise: 0.05,
            feature_noise: 0.05,
            tie_prob: 0.0,
            seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.n == 0 {
            return Err(Error::EmptyItems);
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if self.bins < 2 {
            return bad(format!("bins must be at least 2, got {}", self.bins));
        }
        if !(0.0..0.5).contains(&self.oracle_noise) {
            return bad(format!("oracle_noise must lie in [0, 0.5), got {}", self.oracle_noise));
        }
        for (name, v) in [
            ("margin", self.margin),
            ("prior_noise", self.prior_noise),
            ("feature_noise", self.feature_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.tie_prob) {
            return bad(format!("tie_prob must lie in [0, 1], got {}", self.tie_prob));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub items: Vec<Item>,
    /// Ground-truth score per item; larger is better.
    pub truth: Vec<f64>,
    rng: ChaCha8Rng,
}

impl SyntheticWorld {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = config.n;

        let mut truth: Vec<f64> = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 && config.tie_prob > 0.0 && rng.gen_bool(config.tie_prob) {
                let src = rng.gen_range(0..k);
                truth.push(truth[src]);
            } else {
                truth.push(rng.gen_range(0.0..1.0));
            }
        }

        // Monotone embedding: one steep tanh per dimension.
        let slopes: Vec<f64> = (0..config.feature_dim).map(|_| rng.gen_range(2.0..6.0)).collect();
        let centers: Vec<f64> = (0..config.feature_dim).map(|_| rng.gen_range(0.2..0.8)).collect();
        let unit = Normal::new(0.0, 1.0).expect("unit normal");

        let mut by_truth: Vec<usize> = (0..n).collect();
        by_truth.sort_by(|&a, &b| truth[a].total_cmp(&truth[b]));
        let mut quantile = vec![0.5; n];
        for (rank, &k) in by_truth.iter().enumerate() {
            if n > 1 {
                quantile[k] = rank as f64 / (n - 1) as f64;
            }
        }

        // Linear falloff from the item's position on the bin axis.
        let span = (config.bins - 1) as f64;
        let items = (0..n)
            .map(|k| {
                let features = (0..config.feature_dim)
                    .map(|d| (slopes[d] * (truth[k] - centers[d])).tanh() + config.feature_noise * unit.sample(&mut rng))
                    .collect();
                let x = quantile[k] * span;
                let prompt_scores = (0..config.bins)
                    .map(|b| {
                        let clean = 1.0 - 2.0 * (x - b as f64).abs() / span;
                        (clean + config.prior_noise * unit.sample(&mut rng)).clamp(-1.0, 1.0)
                    })
                    .collect();
                Item::new(format!("item{k:04}"), features, prompt_scores)
            })
            .collect();

        Ok(Self {
            config,
            items,
            truth,
            rng,
        })
    }

    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|it| it.id.clone()).collect()
    }

    /// Ids sorted by ground truth, best first. Ties keep index order.
    pub fn truth_order(&self) -> Vec<String> {
        let mut idx: Vec<usize> = (0..self.truth.len()).collect();
        idx.sort_by(|&a, &b| self.truth[b].total_cmp(&self.truth[a]));
        idx.into_iter().map(|k| self.items[k].id.clone()).collect()
    }

    /// Flip probability for a pair.
    pub fn flip_probability(&self, i: usize, j: usize) -> f64 {
        let eps = self.config.oracle_noise;
        if eps == 0.0 {
            return 0.0;
        }
        let gap = (self.truth[i] - self.truth[j]).abs();
        if gap < self.config.margin {
            eps + (0.5 - eps) * (1.0 - gap / self.config.margin)
        } else {
            eps
        }
    }

    /// Whether item `i` beats item `j` according to the noisy oracle.
    pub fn judge(&mut self, i: usize, j: usize) -> bool {
        let (gi, gj) = (self.truth[i], self.truth[j]);
        let exact = if gi == gj { self.rng.gen_bool(0.5) } else { gi > gj };
        let flip = self.flip_probability(i, j);
        if flip > 0.0 && self.rng.gen_bool(flip) {
            !exact
        } else {
            exact
        }
    }
}
