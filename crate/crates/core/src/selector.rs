//! Composite-utility ranking of candidate human queries.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::config::{ModelWeights, UtilityWeights};
use crate::error::{Error, Result};
use crate::types::{ItemIndex, ModelVote, UtilityBreakdown};

const MAX_VARIANCE: f64 = 0.25;
const REPEAT_PENALTY: f64 = 0.5;
const RECENT_PENALTY: f64 = 0.1;
pub const RECENT_WINDOW: usize = 5;

fn key(i: ItemIndex, j: ItemIndex) -> (ItemIndex, ItemIndex) {
    (i.min(j), i.max(j))
}

/// Human-query history that feeds the novelty term and tie-breaking.
#[derive(Debug, Clone, Default)]
pub struct QueryHistory {
    queried: HashSet<(ItemIndex, ItemIndex)>,
    recent: VecDeque<(ItemIndex, ItemIndex)>,
    last_involved: HashMap<ItemIndex, u64>,
}

impl QueryHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a human query answered at `seq`.
    pub fn record_query(&mut self, i: ItemIndex, j: ItemIndex, seq: u64) {
        self.queried.insert(key(i, j));
        self.recent.push_back((i, j));
        if self.recent.len() > RECENT_WINDOW {
            self.recent.pop_front();
        }
        self.touch(i, seq);
        self.touch(j, seq);
    }

    /// Notes that an item took part in any resolved comparison at `seq`.
    pub fn touch(&mut self, i: ItemIndex, seq: u64) {
        self.last_involved.insert(i, seq);
    }

    pub fn was_queried(&self, i: ItemIndex, j: ItemIndex) -> bool {
        self.queried.contains(&key(i, j))
    }

    /// Recent human queries that involve `i` or `j`.
    pub fn recent_appearances(&self, i: ItemIndex, j: ItemIndex) -> usize {
        self.recent
            .iter()
            .filter(|(a, b)| *a == i || *b == i || *a == j || *b == j)
            .count()
    }

    /// Sequence number of the latest comparison involving either item.
    pub fn last_involvement(&self, i: ItemIndex, j: ItemIndex) -> Option<u64> {
        let a = self.last_involved.get(&i).copied();
        let b = self.last_involved.get(&j).copied();
        a.max(b)
    }

    pub fn novelty(&self, i: ItemIndex, j: ItemIndex) -> f64 {
        let repeat = if self.was_queried(i, j) { REPEAT_PENALTY } else { 0.0 };
        let recent = RECENT_PENALTY * self.recent_appearances(i, j) as f64;
        (1.0 - repeat - recent).clamp(0.0, 1.0)
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Variance of the model probabilities under weights `w_m c_m`, over 0.25.
pub fn weighted_variance(votes: &[ModelVote], weights: &ModelWeights) -> f64 {
    let ws: Vec<f64> = votes.iter().map(|v| weights.get(v.model) * v.c).collect();
    let total: f64 = ws.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = votes.iter().zip(&ws).map(|(v, w)| w * v.p).sum::<f64>() / total;
    let var = votes.iter().zip(&ws).map(|(v, w)| w * (v.p - mean).powi(2)).sum::<f64>() / total;
    (var / MAX_VARIANCE).clamp(0.0, 1.0)
}

/// Fraction of unordered model pairs whose predictions point different ways.
pub fn disagreement(votes: &[ModelVote]) -> f64 {
    let m = votes.len();
    if m < 2 {
        return 0.0;
    }
    let dir = |p: f64| (p - 0.5).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
    let mut disagreeing = 0;
    for a in 0..m {
        for b in a + 1..m {
            if dir(votes[a].p) != dir(votes[b].p) {
                disagreeing += 1;
            }
        }
    }
    disagreeing as f64 / (m * (m - 1) / 2) as f64
}

/// What the selector needs to know about one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub i: ItemIndex,
    pub j: ItemIndex,
    pub p_ens: f64,
    pub votes: Vec<ModelVote>,
    /// `Σ_ii + Σ_jj − 2Σ_ij`, or `None` when the GP does not cover the pair.
    pub info_gain: Option<f64>,
}

pub fn utility(
    c: &Candidate,
    history: &QueryHistory,
    model_weights: &ModelWeights,
    lambda: &UtilityWeights,
) -> UtilityBreakdown {
    let epistemic = weighted_variance(&c.votes, model_weights);
    let aleatoric = binary_entropy(c.p_ens);
    let disagreement = disagreement(&c.votes);
    let novelty = history.novelty(c.i, c.j);
    let total = lambda.epistemic * epistemic
        + lambda.aleatoric * aleatoric
        + lambda.gain * c.info_gain.unwrap_or(0.0)
        + lambda.disagreement * disagreement
        + lambda.novelty * novelty;
    UtilityBreakdown {
        total,
        epistemic,
        aleatoric,
        info_gain: c.info_gain,
        disagreement,
        novelty,
    }
}

/// Index of the highest-utility candidate. Ties go to the pair whose items
/// were involved least recently, then to the lexicographically smaller ids.
pub fn select_next(
    candidates: &[Candidate],
    ids: &[String],
    history: &QueryHistory,
    model_weights: &ModelWeights,
    lambda: &UtilityWeights,
) -> Result<(usize, UtilityBreakdown)> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let scored: Vec<UtilityBreakdown> = candidates
        .iter()
        .map(|c| utility(c, history, model_weights, lambda))
        .collect();
    let sort_key = |k: usize| {
        let c = &candidates[k];
        let (a, b) = (&ids[c.i], &ids[c.j]);
        let ids = if a <= b { (a, b) } else { (b, a) };
        (history.last_involvement(c.i, c.j), ids)
    };
    let mut best = 0;
    for k in 1..candidates.len() {
        let (u, ub) = (scored[k].total, scored[best].total);
        if u > ub || (u == ub && sort_key(k) < sort_key(best)) {
            best = k;
        }
    }
    Ok((best, scored[best]))
}
