//! Coarse pre-ordering from prompt-similarity scores.
//!
//! Each item's similarities to the `B` criterion prompts are turned into a
//! soft bin assignment. The expected bin orders the items, the argmax bin
//! drives seed edges and the Elo initialization.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::types::{Item, ItemIndex};

/// Upper bound on the pre-order confidence of any item.
pub const MAX_PREORDER_CONFIDENCE: f64 = 0.75;

pub const ELO_BASE: f64 = 1200.0;
pub const ELO_PER_BIN: f64 = 150.0;
pub const ELO_JITTER: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPrior {
    pub soft_bins: Vec<f64>,
    pub expected_bin: f64,
    pub hard_bin: usize,
    pub confidence: f64,
}

/// `winner ≻ loser` pseudo-observation with fractional weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedEdge {
    pub loser: ItemIndex,
    pub winner: ItemIndex,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreOrder {
    pub priors: Vec<ItemPrior>,
    pub seed_edges: Vec<SeedEdge>,
    /// Item indices by expected bin, highest first; ties by id.
    pub initial_order: Vec<ItemIndex>,
}

/// Temperature-scaled softmax over prompt scores.
pub fn soft_bin(scores: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::InvalidInput("empty prompt scores".into()));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite prompt score {s}")));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `Σ_b b·p_b` with 0-based bins.
pub fn expected_bin(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(b, pb)| b as f64 * pb).sum()
}

pub fn preorder_confidence(p: &[f64]) -> f64 {
    let max = p.iter().copied().fold(0.0, f64::max);
    max.min(MAX_PREORDER_CONFIDENCE)
}

/// Argmax with ties going to the lower bin.
pub fn hard_bin(p: &[f64]) -> usize {
    let mut best = 0;
    for (b, &pb) in p.iter().enumerate() {
        if pb > p[best] {
            best = b;
        }
    }
    best
}

pub fn item_prior(scores: &[f64], temperature: f64) -> Result<ItemPrior> {
    let soft_bins = soft_bin(scores, temperature)?;
    Ok(ItemPrior {
        expected_bin: expected_bin(&soft_bins),
        hard_bin: hard_bin(&soft_bins),
        confidence: preorder_confidence(&soft_bins),
        soft_bins,
    })
}

pub fn build_preorder(items: &[Item], cfg: &SessionConfig) -> Result<PreOrder> {
    if items.is_empty() {
        return Err(Error::EmptyItems);
    }
    let priors = items
        .iter()
        .map(|it| {
            if it.prompt_scores.len() != cfg.bins {
                return Err(Error::DimensionMismatch {
                    expected: cfg.bins,
                    got: it.prompt_scores.len(),
                });
            }
            item_prior(&it.prompt_scores, cfg.temperature)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut initial_order: Vec<ItemIndex> = (0..items.len()).collect();
    initial_order.sort_by(|&a, &b| {
        priors[b]
            .expected_bin
            .partial_cmp(&priors[a].expected_bin)
            .unwrap_or(Ordering::Equal)
            .then_with(|| items[a].id.cmp(&items[b].id))
    });

    let seed_edges = seed_edges(items, &priors, cfg);
    Ok(PreOrder {
        priors,
        seed_edges,
        initial_order,
    })
}

fn seed_edges(items: &[Item], priors: &[ItemPrior], cfg: &SessionConfig) -> Vec<SeedEdge> {
    let rule = cfg.seed_edge;
    let eligible: Vec<ItemIndex> = (0..items.len())
        .filter(|&i| priors[i].confidence >= rule.conf_min)
        .collect();

    // (min confidence, winner, loser)
    let mut found: Vec<(f64, ItemIndex, ItemIndex)> = Vec::new();
    for (k, &a) in eligible.iter().enumerate() {
        for &b in &eligible[k + 1..] {
            let (ba, bb) = (priors[a].hard_bin, priors[b].hard_bin);
            if ba.abs_diff(bb) < rule.bin_gap_min {
                continue;
            }
            let (winner, loser) = if ba > bb { (a, b) } else { (b, a) };
            let conf = priors[a].confidence.min(priors[b].confidence);
            found.push((conf, winner, loser));
        }
    }
    found.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| items[x.1].id.cmp(&items[y.1].id))
            .then_with(|| items[x.2].id.cmp(&items[y.2].id))
    });
    found.truncate(rule.max_per_item.saturating_mul(items.len()));
    found
        .into_iter()
        .map(|(_, winner, loser)| SeedEdge {
            loser,
            winner,
            weight: rule.weight,
        })
        .collect()
}

/// `R_i = 1200 + 150·bin(i) + U(−75, 75)`, deterministic in `rng_seed`.
pub fn init_elo_ratings(preorder: &PreOrder, rng_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    preorder
        .priors
        .iter()
        .map(|p| {
            ELO_BASE + ELO_PER_BIN * p.hard_bin as f64 + rng.gen_range(-ELO_JITTER..=ELO_JITTER)
        })
        .collect()
}
