//! Ensemble fusion of the four pairwise models and the automation policy.

use serde::{Deserialize, Serialize};

use crate::btl::BtlState;
use crate::config::{AutomationConfig, ModelWeights};
use crate::elo::EloState;
use crate::error::{Error, Result};
use crate::gp::GpState;
use crate::head::HeadModel;
use crate::types::{AutoCondition, ItemIndex, ModelKind, ModelVote, PairDecision, Verdict};

pub const MAX_ENSEMBLE_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub p_ens: f64,
    pub c_ens: f64,
    pub per_model: Vec<ModelVote>,
}

/// `p_ens = Σ w c p / Σ w c`, falling back to the plain mean of `p` when all
/// confidences vanish; `c_ens = min(0.95, (|p_ens − ½| + c̄)/2)`.
pub fn combine(votes: &[ModelVote], weights: &ModelWeights) -> Result<EnsemblePrediction> {
    if votes.is_empty() {
        return Err(Error::NoModelResponse);
    }
    let mass: f64 = votes.iter().map(|v| weights.get(v.model) * v.c).sum();
    let p_ens = if mass > 0.0 {
        votes.iter().map(|v| weights.get(v.model) * v.c * v.p).sum::<f64>() / mass
    } else {
        votes.iter().map(|v| v.p).sum::<f64>() / votes.len() as f64
    };
    let c_bar = votes.iter().map(|v| v.c).sum::<f64>() / votes.len() as f64;
    let c_ens = ((p_ens - 0.5).abs() + c_bar) / 2.0;
    Ok(EnsemblePrediction {
        p_ens,
        c_ens: c_ens.min(MAX_ENSEMBLE_CONFIDENCE),
        per_model: votes.to_vec(),
    })
}

/// Items in the top 10% and top 5% of the current consensus ordering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopSet {
    pub top10: Vec<bool>,
    pub top5: Vec<bool>,
}

impl TopSet {
    pub fn empty(n: usize) -> Self {
        Self {
            top10: vec![false; n],
            top5: vec![false; n],
        }
    }

    /// Marks the best `⌈0.10 n⌉` and `⌈0.05 n⌉` items by score.
    pub fn from_scores(scores: &[f64]) -> Self {
        let n = scores.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut set = Self::empty(n);
        let k10 = (n as f64 * 0.10).ceil() as usize;
        let k5 = (n as f64 * 0.05).ceil() as usize;
        for (rank, &i) in order.iter().enumerate() {
            set.top10[i] = rank < k10;
            set.top5[i] = rank < k5;
        }
        set
    }

    /// Threshold increment for a pair: the larger boost implied by either item.
    pub fn boost(&self, i: ItemIndex, j: ItemIndex, cfg: &AutomationConfig) -> f64 {
        let hit = |set: &[bool]| set.get(i).copied().unwrap_or(false) || set.get(j).copied().unwrap_or(false);
        if hit(&self.top5) {
            cfg.top5_boost
        } else if hit(&self.top10) {
            cfg.top10_boost
        } else {
            0.0
        }
    }
}

/// Rank percentile of every item (1 = best), ties sharing their mean rank.
pub fn rank_percentiles(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n <= 1 {
        return vec![1.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mean_rank = (start + end - 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = mean_rank / (n - 1) as f64;
        }
        start = end;
    }
    out
}

/// The model snapshot a decision is taken against.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub elo: EloState,
    pub btl: BtlState,
    pub gp: Option<GpState>,
    pub head: HeadModel,
}

impl ModelSet {
    /// One vote per model that covers both items.
    pub fn votes(&self, features: &[Vec<f64>], i: ItemIndex, j: ItemIndex) -> Result<Vec<ModelVote>> {
        let mut votes = Vec::with_capacity(4);
        let (p, c) = self.head.pair(&features[i], &features[j])?;
        votes.push(ModelVote { model: ModelKind::Text, p, c });
        let (p, c) = self.elo.prob_and_conf(i, j)?;
        votes.push(ModelVote { model: ModelKind::Elo, p, c });
        let (p, c) = self.btl.prob_and_conf(i, j)?;
        votes.push(ModelVote { model: ModelKind::Btl, p, c });
        if let Some(pred) = self.gp.as_ref().and_then(|gp| gp.predict(i, j)) {
            votes.push(ModelVote {
                model: ModelKind::Gp,
                p: pred.p,
                c: pred.confidence,
            });
        }
        Ok(votes)
    }

    /// Weighted rank-percentile consensus score per item.
    pub fn consensus_scores(&self, features: &[Vec<f64>], weights: &ModelWeights) -> Vec<f64> {
        let n = self.elo.len();
        let mut columns: Vec<(f64, Vec<f64>)> = Vec::new();
        let head: Vec<f64> = features.iter().map(|x| self.head.score(x).unwrap_or(0.5)).collect();
        columns.push((weights.text, rank_percentiles(&head)));
        columns.push((weights.elo, rank_percentiles(&self.elo.ratings)));
        columns.push((weights.btl, rank_percentiles(&self.btl.strengths())));
        if let Some(gp) = &self.gp {
            if gp.active().len() == n {
                let means: Vec<f64> = (0..n).map(|i| gp.mean_of(i).unwrap_or(0.0)).collect();
                columns.push((weights.gp, rank_percentiles(&means)));
            }
        }
        let total: f64 = columns.iter().map(|(w, _)| w).sum();
        (0..n)
            .map(|i| {
                if total > 0.0 {
                    columns.iter().map(|(w, col)| w * col[i]).sum::<f64>() / total
                } else {
                    columns.iter().map(|(_, col)| col[i]).sum::<f64>() / columns.len() as f64
                }
            })
            .collect()
    }

    /// Ensemble prediction and automation verdict for `i ≻ j`.
    ///
    /// Evaluated with the lower index first and mirrored, so `(i, j)` and
    /// `(j, i)` always get the same verdict and complementary `p_ens`.
    pub fn decide(
        &self,
        features: &[Vec<f64>],
        i: ItemIndex,
        j: ItemIndex,
        weights: &ModelWeights,
        cfg: &AutomationConfig,
        theta_eff: f64,
    ) -> Result<PairDecision> {
        if i > j {
            let mut d = self.decide(features, j, i, weights, cfg, theta_eff)?;
            d.p_ens = 1.0 - d.p_ens;
            for v in &mut d.per_model {
                v.p = 1.0 - v.p;
            }
            return Ok(d);
        }
        let votes = self.votes(features, i, j)?;
        let ens = combine(&votes, weights)?;
        let verdict = automation_verdict(&ens, self.elo_disjoint(i, j, cfg.gamma)? || self.gp_disjoint(i, j, cfg.gamma), cfg, theta_eff);
        Ok(PairDecision {
            p_ens: ens.p_ens,
            c_ens: ens.c_ens,
            per_model: ens.per_model,
            verdict,
            utility: None,
        })
    }

    fn elo_disjoint(&self, i: ItemIndex, j: ItemIndex, gamma: f64) -> Result<bool> {
        Ok(disjoint(self.elo.interval(i, gamma)?, self.elo.interval(j, gamma)?))
    }

    fn gp_disjoint(&self, i: ItemIndex, j: ItemIndex, gamma: f64) -> bool {
        let Some(gp) = self.gp.as_ref().filter(|gp| gp.fitted) else {
            return false;
        };
        match (gp.interval(i, gamma), gp.interval(j, gamma)) {
            (Some(a), Some(b)) => disjoint(a, b),
            _ => false,
        }
    }
}

/// Strict separation; touching endpoints do not count.
pub fn disjoint(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 < b.0 || b.1 < a.0
}

/// The three automation conditions, checked in order. A prediction of
/// exactly one half always goes to a human.
pub fn automation_verdict(ens: &EnsemblePrediction, intervals_disjoint: bool, cfg: &AutomationConfig, theta_eff: f64) -> Verdict {
    if ens.p_ens == 0.5 {
        return Verdict::NeedsHuman;
    }
    if intervals_disjoint {
        return Verdict::Auto {
            condition: AutoCondition::Interval,
        };
    }
    if let Some(gp) = ens.per_model.iter().find(|v| v.model == ModelKind::Gp) {
        // c_gp = |2p − 1|(1 − epi), so the epistemic share is recoverable
        let sharp = (2.0 * gp.p - 1.0).abs();
        let epistemic = if sharp > 0.0 { 1.0 - gp.c / sharp } else { 1.0 };
        if gp.c >= cfg.gp_conf_min && epistemic < cfg.gp_epi_max {
            return Verdict::Auto {
                condition: AutoCondition::Gp,
            };
        }
    }
    let up = ens.p_ens > 0.5;
    let agreeing = ens
        .per_model
        .iter()
        .filter(|v| v.p != 0.5 && (v.p > 0.5) == up)
        .count();
    if ens.per_model.len() >= cfg.min_agreeing && agreeing >= cfg.min_agreeing && ens.c_ens >= theta_eff {
        return Verdict::Auto {
            condition: AutoCondition::Agreement,
        };
    }
    Verdict::NeedsHuman
}
