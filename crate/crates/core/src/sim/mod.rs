//! Synthetic-oracle experiments and ranking metrics.

pub mod experiment;
pub mod metrics;
pub mod world;

pub use experiment::{run_experiment, CurvePoint, ExperimentConfig, ExperimentRun, Policy, Report};
pub use metrics::{effgain, kendall_tau, spearman_rho};
pub use world::{SyntheticWorld, WorldConfig};
