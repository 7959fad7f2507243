//! Append-only session event log.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;
use crate::types::{ComparisonRecord, Item, PairDecision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub session_id: String,
    pub timestamp: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Which model a retrain refits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrainTarget {
    #[default]
    Head,
    Gp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        config: SessionConfig,
        items: Vec<Item>,
    },
    PairIssued {
        i: String,
        j: String,
        decision: PairDecision,
    },
    Judgment {
        record: ComparisonRecord,
    },
    AutoResolved {
        record: ComparisonRecord,
    },
    /// A retrain over the first `trained_on` comparisons was requested.
    RetrainStarted {
        trained_on: usize,
        #[serde(default)]
        target: RetrainTarget,
    },
    /// The retrain over the first `trained_on` comparisons was installed.
    RetrainDone {
        trained_on: usize,
        version: u64,
        #[serde(default)]
        target: RetrainTarget,
    },
    Completed {
        ranking: Vec<String>,
        budget_exhausted: bool,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Created { .. } => "created",
            EventKind::PairIssued { .. } => "pair_issued",
            EventKind::Judgment { .. } => "judgment",
            EventKind::AutoResolved { .. } => "auto_resolved",
            EventKind::RetrainStarted { .. } => "retrain_started",
            EventKind::RetrainDone { .. } => "retrain_done",
            EventKind::Completed { .. } => "completed",
        }
    }
}

/// Source of event and record timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    /// Milliseconds since the Unix epoch.
    #[default]
    Wall,
    /// The event sequence number, for reproducible logs.
    Logical,
}

impl Clock {
    pub fn now(&self, seq: u64) -> u64 {
        match self {
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            Clock::Logical => seq,
        }
    }
}
