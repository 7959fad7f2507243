use thiserror::Error;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("line {line}: {reason}")]
    Ingest { line: usize, reason: String },

    #[error("line {line}: duplicate item id {id}")]
    DuplicateId { id: String, line: usize },

    #[error("{path}: line {line}: {reason}")]
    Log { path: String, line: usize, reason: String },

    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("session {0} already exists")]
    SessionExists(String),

    #[error("invalid request: {0}")]
    BadRequest(String),

    #[error(transparent)]
    Core(#[from] hilrank_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
