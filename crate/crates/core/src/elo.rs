//! Online Elo ratings with a stepped K-factor and per-item uncertainty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ItemIndex;

pub const K_INITIAL: f64 = 128.0;
pub const K_SETTLED: f64 = 64.0;
/// Comparisons after which K drops to [`K_SETTLED`].
pub const K_STEP_AT: u64 = 100;

const CONFIDENCE_SCALE: f64 = 512.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloState {
    pub ratings: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_comparisons: u64,
}

/// `1 / (1 + 10^((R_j − R_i)/400))`.
pub fn elo_expected(r_i: f64, r_j: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((r_j - r_i) / 400.0))
}

impl EloState {
    pub fn new(ratings: Vec<f64>) -> Self {
        let n = ratings.len();
        Self {
            ratings,
            counts: vec![0; n],
            total_comparisons: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn k_factor(&self) -> f64 {
        if self.total_comparisons < K_STEP_AT {
            K_INITIAL
        } else {
            K_SETTLED
        }
    }

    fn check(&self, i: ItemIndex) -> Result<()> {
        if i < self.ratings.len() {
            Ok(())
        } else {
            Err(Error::UnknownItem(format!("index {i}")))
        }
    }

    /// Applies `weight·K·(y − E)` to `i` and the opposite delta to `j`.
    ///
    /// The update is computed in index order so that `(i, j, y)` and
    /// `(j, i, 1 − y)` produce bit-identical states.
    pub fn update(&mut self, i: ItemIndex, j: ItemIndex, first_wins: bool, weight: f64) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::InvalidInput("self-comparison".into()));
        }
        let (a, b, a_wins) = if i < j {
            (i, j, first_wins)
        } else {
            (j, i, !first_wins)
        };
        let expected = elo_expected(self.ratings[a], self.ratings[b]);
        let y = if a_wins { 1.0 } else { 0.0 };
        let delta = weight * self.k_factor() * (y - expected);
        self.ratings[a] += delta;
        self.ratings[b] -= delta;
        self.counts[a] += 1;
        self.counts[b] += 1;
        self.total_comparisons += 1;
        Ok(())
    }

    /// `σ_i = 2K/√(1 + n_i)`.
    pub fn uncertainty(&self, i: ItemIndex) -> Result<f64> {
        self.check(i)?;
        Ok(2.0 * self.k_factor() / (1.0 + self.counts[i] as f64).sqrt())
    }

    pub fn expected(&self, i: ItemIndex, j: ItemIndex) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(elo_expected(self.ratings[i], self.ratings[j]))
    }

    /// Probability and confidence for the ensemble; confidence shrinks as
    /// the two ratings get less certain.
    pub fn prob_and_conf(&self, i: ItemIndex, j: ItemIndex) -> Result<(f64, f64)> {
        let p = self.expected(i, j)?;
        let spread = self.uncertainty(i)? + self.uncertainty(j)?;
        let c = ((p - 0.5).abs() * 2.0 / (1.0 + spread / CONFIDENCE_SCALE)).clamp(0.0, 1.0);
        Ok((p, c))
    }

    /// `[R − γσ, R + γσ]`.
    pub fn interval(&self, i: ItemIndex, gamma: f64) -> Result<(f64, f64)> {
        let s = self.uncertainty(i)?;
        Ok((self.ratings[i] - gamma * s, self.ratings[i] + gamma * s))
    }
}
