//! Value types shared by every part of the ranking engine.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of an item inside a session (position in the ingested item list).
pub type ItemIndex = usize;

/// A resolved comparison expressed with session indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexedComparison {
    pub i: ItemIndex,
    pub j: ItemIndex,
    pub first_wins: bool,
    pub weight: f64,
}

impl IndexedComparison {
    pub fn winner(&self) -> ItemIndex {
        if self.first_wins {
            self.i
        } else {
            self.j
        }
    }

    pub fn loser(&self) -> ItemIndex {
        if self.first_wins {
            self.j
        } else {
            self.i
        }
    }
}

/// An element to be ranked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub features: Vec<f64>,
    pub prompt_scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_uri: Option<String>,
}

impl Item {
    pub fn new(id: impl Into<String>, features: Vec<f64>, prompt_scores: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            features,
            prompt_scores,
            display_uri: None,
        }
    }

    /// Checks the dimensional and range invariants against a session's `D` and `B`.
    pub fn validate(&self, feature_dim: usize, bins: usize) -> Result<()> {
        if self.features.len() != feature_dim {
            return Err(Error::DimensionMismatch {
                expected: feature_dim,
                got: self.features.len(),
            });
        }
        if self.prompt_scores.len() != bins {
            return Err(Error::DimensionMismatch {
                expected: bins,
                got: self.prompt_scores.len(),
            });
        }
        if let Some(x) = self.features.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "item {}: non-finite feature {x}",
                self.id
            )));
        }
        if let Some(s) = self
            .prompt_scores
            .iter()
            .find(|s| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(Error::InvalidInput(format!(
                "item {}: prompt score {s} outside [-1, 1]",
                self.id
            )));
        }
        Ok(())
    }
}

/// Outcome of a comparison between the first-listed item `i` and the second `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Outcome {
    /// `y = 0`: `j ≻ i`.
    SecondWins,
    /// `y = 1`: `i ≻ j`.
    FirstWins,
}

impl Outcome {
    pub fn from_first_wins(first_wins: bool) -> Self {
        if first_wins {
            Outcome::FirstWins
        } else {
            Outcome::SecondWins
        }
    }

    pub fn first_wins(self) -> bool {
        self == Outcome::FirstWins
    }

    pub fn as_f64(self) -> f64 {
        if self.first_wins() {
            1.0
        } else {
            0.0
        }
    }

    pub fn flipped(self) -> Self {
        Self::from_first_wins(!self.first_wins())
    }
}

impl From<Outcome> for u8 {
    fn from(o: Outcome) -> u8 {
        o.first_wins() as u8
    }
}

impl TryFrom<u8> for Outcome {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Outcome::SecondWins),
            1 => Ok(Outcome::FirstWins),
            other => Err(format!("outcome must be 0 or 1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Human,
    Auto,
    Seed,
}

/// The four members of the prediction ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Trainable ranking head over frozen features.
    Text,
    Elo,
    Btl,
    Gp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Text, ModelKind::Elo, ModelKind::Btl, ModelKind::Gp];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Text => "text",
            ModelKind::Elo => "elo",
            ModelKind::Btl => "btl",
            ModelKind::Gp => "gp",
        };
        f.write_str(s)
    }
}

/// One model's opinion on `i ≻ j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelVote {
    pub model: ModelKind,
    pub p: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoCondition {
    /// Non-overlapping confidence intervals.
    Interval,
    /// Confident, low-epistemic GP posterior.
    Gp,
    /// Confident ensemble with enough models agreeing.
    Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Verdict {
    Auto { condition: AutoCondition },
    NeedsHuman,
}

impl Verdict {
    pub fn is_auto(&self) -> bool {
        matches!(self, Verdict::Auto { .. })
    }
}

/// Terms of the composite query utility.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub total: f64,
    pub epistemic: f64,
    pub aleatoric: f64,
    /// `None` when the GP is not active.
    pub info_gain: Option<f64>,
    pub disagreement: f64,
    pub novelty: f64,
}

/// Ensemble view of a candidate pair together with the automation verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub p_ens: f64,
    pub c_ens: f64,
    pub per_model: Vec<ModelVote>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityBreakdown>,
}

/// One resolved pair. `y = 1` means `i ≻ j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub seq: u64,
    pub i: String,
    pub j: String,
    pub y: Outcome,
    pub weight: f64,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PairDecision>,
    /// Milliseconds since the Unix epoch, or a logical tick for simulated sessions.
    pub timestamp: u64,
}

impl ComparisonRecord {
    pub fn winner(&self) -> &str {
        if self.y.first_wins() {
            &self.i
        } else {
            &self.j
        }
    }

    pub fn loser(&self) -> &str {
        if self.y.first_wins() {
            &self.j
        } else {
            &self.i
        }
    }
}
