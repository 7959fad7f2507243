//! Bradley–Terry–Luce strengths fitted with the MM algorithm.
//!
//! Regularization is a virtual anchor player of strength 1 against which
//! every item has `λ` pseudo-wins and `λ` pseudo-losses. Because the anchor
//! pins the scale, each sweep is an MM update followed by the exact
//! maximization of the likelihood along the common-scale direction; both
//! steps are ascent steps, so the objective never decreases.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ItemIndex;

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_SWEEPS: usize = 10;
/// Combined comparison count at which BTL confidence stops being damped.
const SUPPORT_FULL: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtlState {
    /// `wins[i][j]`: accumulated weighted wins of `i` over `j`.
    wins: Vec<BTreeMap<ItemIndex, f64>>,
    counts: Vec<u64>,
    lambda: f64,
    sweeps: usize,
    /// Strengths on the anchor's scale.
    raw: Vec<f64>,
    recorded: u64,
    stale: bool,
}

impl BtlState {
    pub fn new(n: usize) -> Self {
        Self::with_params(n, DEFAULT_LAMBDA, DEFAULT_SWEEPS)
    }

    pub fn with_params(n: usize, lambda: f64, sweeps: usize) -> Self {
        Self {
            wins: vec![BTreeMap::new(); n],
            counts: vec![0; n],
            lambda,
            sweeps,
            raw: vec![1.0; n],
            recorded: 0,
            stale: false,
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    fn check(&self, i: ItemIndex) -> Result<()> {
        if i < self.raw.len() {
            Ok(())
        } else {
            Err(Error::UnknownItem(format!("index {i}")))
        }
    }

    pub fn record(&mut self, i: ItemIndex, j: ItemIndex, first_wins: bool, weight: f64) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::InvalidInput("self-comparison".into()));
        }
        let (winner, loser) = if first_wins { (i, j) } else { (j, i) };
        *self.wins[winner].entry(loser).or_insert(0.0) += weight;
        self.wins[loser].entry(winner).or_insert(0.0);
        self.counts[i] += 1;
        self.counts[j] += 1;
        self.recorded += 1;
        self.stale = true;
        Ok(())
    }

    pub fn win_weight(&self, winner: ItemIndex, loser: ItemIndex) -> f64 {
        self.wins
            .get(winner)
            .and_then(|m| m.get(&loser))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn count(&self, i: ItemIndex) -> u64 {
        self.counts.get(i).copied().unwrap_or(0)
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    /// Regularized log-likelihood of the given anchor-scale strengths.
    pub fn log_likelihood(&self, raw: &[f64]) -> f64 {
        let mut ll = 0.0;
        for (i, row) in self.wins.iter().enumerate() {
            for (&j, &w) in row {
                if w > 0.0 {
                    ll += w * (raw[i] / (raw[i] + raw[j])).ln();
                }
            }
        }
        if self.lambda > 0.0 {
            for &p in raw {
                ll += self.lambda * (p.ln() - 2.0 * (p + 1.0).ln());
            }
        }
        ll
    }

    /// Refits from uniform strengths; a no-op without recorded comparisons.
    pub fn refit(&mut self) {
        self.refit_traced();
    }

    /// Refit returning the log-likelihood before the first and after every sweep.
    pub fn refit_traced(&mut self) -> Vec<f64> {
        let n = self.raw.len();
        self.raw = vec![1.0; n];
        self.stale = false;
        if self.recorded == 0 {
            return Vec::new();
        }
        let mut trace = vec![self.log_likelihood(&self.raw)];
        let win_totals: Vec<f64> = self.wins.iter().map(|row| row.values().sum()).collect();
        for _ in 0..self.sweeps {
            let mut next = vec![0.0; n];
            for i in 0..n {
                let pi = self.raw[i];
                let mut denom = 0.0;
                for (&j, &w_ij) in &self.wins[i] {
                    let games = w_ij + self.win_weight(j, i);
                    denom += games / (pi + self.raw[j]);
                }
                denom += 2.0 * self.lambda / (pi + 1.0);
                next[i] = if denom > 0.0 {
                    (win_totals[i] + self.lambda) / denom
                } else {
                    pi
                };
            }
            self.raw = next;
            if self.lambda > 0.0 {
                self.rescale_to_anchor();
            }
            trace.push(self.log_likelihood(&self.raw));
        }
        trace
    }

    /// Multiplies all strengths by the factor that maximizes the likelihood;
    /// only the anchor terms depend on it: `Σ tanh((t + ln π_i)/2) = 0`.
    fn rescale_to_anchor(&mut self) {
        let logs: Vec<f64> = self.raw.iter().map(|p| p.ln()).collect();
        if logs.iter().any(|l| !l.is_finite()) {
            return;
        }
        let g = |t: f64| logs.iter().map(|l| ((t + l) / 2.0).tanh()).sum::<f64>();
        let (mut lo, mut hi) = logs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(-l), hi.max(-l)));
        // g is increasing and changes sign within [min(−ln π), max(−ln π)]
        let mut t = 0.5 * (lo + hi);
        for _ in 0..100 {
            let gt = g(t);
            if gt.abs() < 1e-14 {
                break;
            }
            if gt > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope: f64 = logs
                .iter()
                .map(|l| 0.5 / ((t + l) / 2.0).cosh().powi(2))
                .sum();
            let newton = t - gt / slope;
            t = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        let c = t.exp();
        for p in &mut self.raw {
            *p *= c;
        }
    }

    /// Strengths normalized so that `Σ π = n`.
    pub fn strengths(&self) -> Vec<f64> {
        let total: f64 = self.raw.iter().sum();
        let n = self.raw.len() as f64;
        self.raw.iter().map(|p| p * n / total).collect()
    }

    /// `π_i/(π_i + π_j)`.
    pub fn prob(&self, i: ItemIndex, j: ItemIndex) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.raw[i] / (self.raw[i] + self.raw[j]))
    }

    /// Sharpness damped by the pair's combined comparison support.
    pub fn prob_and_conf(&self, i: ItemIndex, j: ItemIndex) -> Result<(f64, f64)> {
        let p = self.prob(i, j)?;
        let support = ((self.counts[i] + self.counts[j]) as f64 / SUPPORT_FULL).min(1.0);
        Ok((p, (2.0 * p - 1.0).abs() * support))
    }
}
