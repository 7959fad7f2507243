//! Full sessions against a synthetic oracle.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{kendall_tau, spearman_rho};
use super::world::{SyntheticWorld, WorldConfig};
use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::session::{Clock, RetrainMode, Session, SessionEvent, SessionOptions, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Prior, ensemble automation and utility selection, as configured.
    Guided,
    /// Merge sort with every model-side feature disabled.
    PlainMergesort,
    /// Uniformly random distinct pairs, scored by win rate.
    RandomPairs,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Guided => "guided",
            Policy::PlainMergesort => "plain_mergesort",
            Policy::RandomPairs => "random_pairs",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guided" => Ok(Policy::Guided),
            "plain_mergesort" => Ok(Policy::PlainMergesort),
            "random_pairs" => Ok(Policy::RandomPairs),
            other => Err(Error::InvalidInput(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    /// Session settings; `n`, `bins` and `feature_dim` are taken from the world.
    pub session: SessionConfig,
    pub policy: Policy,
    /// Number of pairs drawn by `random_pairs`; defaults to `n·⌈log₂ n⌉`.
    pub random_budget: Option<u64>,
    /// Record τ against ground truth every this many human comparisons.
    pub curve_every: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(world: WorldConfig, policy: Policy) -> Self {
        Self {
            world,
            session: SessionConfig::default(),
            policy,
            random_budget: None,
            curve_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub human: u64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub policy: Policy,
    pub n: usize,
    pub oracle_noise: f64,
    pub prior_noise: f64,
    pub seed: u64,
    pub tau: f64,
    pub rho: f64,
    pub human: u64,
    pub auto: u64,
    pub seed_edges: u64,
    pub automation_rate: f64,
    pub budget_exhausted: bool,
    pub head_version: u64,
    /// Composite utility of each pair served to the oracle, in order.
    pub utility_trace: Vec<f64>,
    pub curve: Vec<CurvePoint>,
    pub ranking: Vec<String>,
    pub truth: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: Report,
    /// Session event log; empty for `random_pairs`.
    pub events: Vec<SessionEvent>,
}

pub fn plain_config(cfg: SessionConfig) -> SessionConfig {
    SessionConfig {
        prior_enabled: false,
        automation_enabled: false,
        selection_enabled: false,
        ..cfg
    }
}

fn default_pairs(n: usize) -> u64 {
    if n < 2 {
        return 0;
    }
    n as u64 * (n as f64).log2().ceil() as u64
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let started = Instant::now();
    let mut world = SyntheticWorld::new(cfg.world.clone())?;
    let truth = world.truth_order();
    let tau_of = |order: &[String]| if order.len() < 2 { Ok(1.0) } else { kendall_tau(order, &truth) };
    let rho_of = |order: &[String]| if order.len() < 2 { Ok(1.0) } else { spearman_rho(order, &truth) };

    let mut report = Report {
        policy: cfg.policy,
        n: cfg.world.n,
        oracle_noise: cfg.world.oracle_noise,
        prior_noise: cfg.world.prior_noise,
        seed: cfg.world.seed,
        tau: 0.0,
        rho: 0.0,
        human: 0,
        auto: 0,
        seed_edges: 0,
        automation_rate: 0.0,
        budget_exhausted: false,
        head_version: 0,
        utility_trace: Vec::new(),
        curve: Vec::new(),
        ranking: Vec::new(),
        truth: truth.clone(),
        elapsed: Duration::ZERO,
    };

    if cfg.policy == Policy::RandomPairs {
        let ranking = random_pairs(&mut world, cfg, &mut report, &tau_of)?;
        report.tau = tau_of(&ranking)?;
        report.rho = rho_of(&ranking)?;
        report.ranking = ranking;
        report.elapsed = started.elapsed();
        return Ok(ExperimentRun { report, events: Vec::new() });
    }

    let mut session_cfg = SessionConfig {
        n: cfg.world.n,
        bins: cfg.world.bins,
        feature_dim: cfg.world.feature_dim,
        ..cfg.session.clone()
    };
    if cfg.policy == Policy::PlainMergesort {
        session_cfg = plain_config(session_cfg);
    }
    let options = SessionOptions {
        retrain: RetrainMode::Inline,
        clock: Clock::Logical,
    };
    let id = format!("sim-{}-{}", cfg.policy, cfg.world.seed);
    let mut session = Session::new(id, world.items.clone(), session_cfg, options)?;

    let ranking = loop {
        match session.step()? {
            StepOutcome::NeedHuman { i, j, decision } => {
                if let Some(u) = &decision.utility {
                    report.utility_trace.push(u.total);
                }
                let (a, b) = (session.lookup(&i)?, session.lookup(&j)?);
                let a_wins = world.judge(a, b);
                session.submit_judgment(&i, &j, a_wins)?;
                if let Some(every) = cfg.curve_every.filter(|&e| e > 0) {
                    let human = session.human_count();
                    if human % every == 0 {
                        let order = session.current_ranking().order;
                        report.curve.push(CurvePoint { human, tau: tau_of(&order)? });
                    }
                }
            }
            StepOutcome::AutoResolving { .. } => {}
            StepOutcome::Complete { ranking } => break ranking,
        }
    };

    let stats = session.stats();
    report.tau = tau_of(&ranking)?;
    report.rho = rho_of(&ranking)?;
    report.human = stats.human;
    report.auto = stats.auto;
    report.seed_edges = stats.seed;
    report.automation_rate = stats.automation_rate;
    report.budget_exhausted = stats.budget_exhausted;
    report.head_version = stats.head_version;
    report.ranking = ranking;
    report.elapsed = started.elapsed();
    Ok(ExperimentRun {
        report,
        events: session.events().to_vec(),
    })
}

fn random_pairs(
    world: &mut SyntheticWorld,
    cfg: &ExperimentConfig,
    report: &mut Report,
    tau_of: &dyn Fn(&[String]) -> Result<f64>,
) -> Result<Vec<String>> {
    let n = world.items.len();
    let ids = world.ids();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.session.rng_seed ^ cfg.world.seed.rotate_left(17));
    let mut wins = vec![0.0f64; n];
    let mut games = vec![0.0f64; n];
    let order = |wins: &[f64], games: &[f64]| -> Vec<String> {
        let rate: Vec<f64> = (0..n)
            .map(|k| if games[k] > 0.0 { wins[k] / games[k] } else { 0.5 })
            .collect();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| rate[b].total_cmp(&rate[a]).then(a.cmp(&b)));
        idx.into_iter().map(|k| ids[k].clone()).collect()
    };
    if n < 2 {
        return Ok(order(&wins, &games));
    }
    let budget = cfg.random_budget.unwrap_or_else(|| default_pairs(n));
    for t in 1..=budget {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let winner = if world.judge(i, j) { i } else { j };
        wins[winner] += 1.0;
        games[i] += 1.0;
        games[j] += 1.0;
        if let Some(every) = cfg.curve_every.filter(|&e| e > 0) {
            if t % every == 0 {
                report.curve.push(CurvePoint {
                    human: t,
                    tau: tau_of(&order(&wins, &games))?,
                });
            }
        }
    }
    report.human = budget;
    Ok(order(&wins, &games))
}
