//! Annotation service for the hilrank engine: JSONL ingestion, an on-disk
//! event store, the HTTP session API, and log reporting.

pub mod api;
pub mod error;
pub mod ingest;
pub mod report;
pub mod store;

pub use api::{router, serve, AppState, ServiceOptions};
pub use error::{Result, ServiceError};
pub use ingest::{ingest_features, parse_features};
pub use store::EventStore;
