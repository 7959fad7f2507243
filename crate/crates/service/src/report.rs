//! Summaries of stored session logs and the efficiency-gain comparison.

use std::path::Path;

use hilrank_core::session::{Session, SessionEvent};
use hilrank_core::sim::{effgain, kendall_tau, spearman_rho};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub session_id: String,
    pub n: usize,
    pub complete: bool,
    pub human: u64,
    pub auto: u64,
    pub seed: u64,
    pub automation_rate: f64,
    pub ranking: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

pub fn summarize(events: &[SessionEvent], truth: Option<&[String]>) -> Result<LogSummary> {
    let mut session = Session::replay(events)?;
    let stats = session.stats();
    let ranking = session.current_ranking().order;
    let (tau, rho) = match truth {
        Some(t) if ranking.len() >= 2 => (Some(kendall_tau(&ranking, t)?), Some(spearman_rho(&ranking, t)?)),
        _ => (None, None),
    };
    Ok(LogSummary {
        session_id: session.id().to_string(),
        n: stats.n,
        complete: session.is_complete(),
        human: stats.human,
        auto: stats.auto,
        seed: stats.seed,
        automation_rate: stats.automation_rate,
        ranking,
        tau,
        rho,
    })
}

/// Reads a ground-truth order, best first, from JSON: an array of ids, an
/// object mapping id to score, or a simulation report with a `truth` field.
pub fn load_truth(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let value: Value = serde_json::from_slice(&std::fs::read(path)?)?;
    truth_from_value(value)
}

pub fn truth_from_value(value: Value) -> Result<Vec<String>> {
    let bad = || ServiceError::BadRequest("truth must be an id array, an id→score object, or a report".into());
    match value {
        Value::Array(ids) => ids
            .into_iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(bad))
            .collect(),
        Value::Object(mut map) => {
            if let Some(t @ Value::Array(_)) = map.remove("truth") {
                return truth_from_value(t);
            }
            let mut scored = Vec::with_capacity(map.len());
            for (id, v) in map {
                scored.push((id, v.as_f64().ok_or_else(bad)?));
            }
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            Ok(scored.into_iter().map(|(id, _)| id).collect())
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffGainReport {
    pub n: usize,
    pub tau_ours: f64,
    pub tau_base: f64,
    pub delta_hc: f64,
    pub effgain: f64,
}

pub fn effgain_report(n: usize, tau_ours: f64, tau_base: f64, delta_hc: f64) -> Result<EffGainReport> {
    Ok(EffGainReport {
        n,
        tau_ours,
        tau_base,
        delta_hc,
        effgain: effgain(tau_ours, tau_base, delta_hc, n)?,
    })
}

/// EffGain of `ours` over `base`, with ΔHC the difference in human comparisons.
pub fn compare(ours: &LogSummary, base: &LogSummary) -> Result<EffGainReport> {
    let need = |s: &LogSummary| {
        s.tau
            .ok_or_else(|| ServiceError::BadRequest(format!("no ground truth for session {}", s.session_id)))
    };
    if ours.n != base.n {
        return Err(ServiceError::BadRequest(format!("item counts differ: {} vs {}", ours.n, base.n)));
    }
    effgain_report(ours.n, need(ours)?, need(base)?, ours.human as f64 - base.human as f64)
}
