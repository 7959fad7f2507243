use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown item: {0}")]
    UnknownItem(String),

    #[error("item list is empty")]
    EmptyItems,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel matrix is singular even after jitter")]
    SingularKernel,

    #[error("no model produced a prediction for the pair")]
    NoModelResponse,

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("stale judgment: expected pair ({expected_i}, {expected_j})")]
    StalePair {
        expected_i: String,
        expected_j: String,
    },

    #[error("no pair is awaiting judgment")]
    NoOutstandingPair,

    #[error("session is complete")]
    SessionComplete,

    #[error("session is not complete yet")]
    NotComplete,

    #[error("rankings do not cover the same item set")]
    MismatchedRankings,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("replay failed at event {seq}: {reason}")]
    Replay { seq: u64, reason: String },
}
