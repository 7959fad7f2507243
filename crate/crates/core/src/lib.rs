//! Human-in-the-loop pairwise ranking.
//!
//! Items are pre-ordered from prompt-similarity scores, then sorted with a
//! bottom-up merge sort whose comparisons are either resolved automatically
//! by a confidence-gated model ensemble (Elo, BTL, a GP preference model and a
//! trainable ranking head) or handed to a human, most informative first.

pub mod btl;
pub mod config;
pub mod elo;
pub mod ensemble;
pub mod error;
pub mod gp;
pub mod head;
pub mod optim;
pub mod preorder;
pub mod selector;
pub mod session;
pub mod sim;
pub mod types;

pub use config::{validate_config, ModelWeights, SessionConfig};
pub use error::{Error, Result};
pub use types::*;
