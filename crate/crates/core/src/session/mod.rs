//! Ranking sessions: pre-ordering, merge sort over the pre-order,
//! automatic or human resolution of every requested comparison, and an
//! event log from which the whole state can be rebuilt.

pub mod events;
pub mod merge;
pub mod retrain;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::btl::BtlState;
use crate::config::{validate_config, ModelWeights, SessionConfig};
use crate::elo::EloState;
use crate::ensemble::{ModelSet, TopSet};
use crate::error::{Error, Result};
use crate::gp::GpState;
use crate::head::{train_head, HeadModel};
use crate::preorder::{build_preorder, init_elo_ratings, ELO_BASE};
use crate::selector::{select_next, Candidate, QueryHistory};
use crate::types::{ComparisonRecord, IndexedComparison, Item, ItemIndex, Outcome, PairDecision, Source};

pub use events::{Clock, EventKind, RetrainTarget, SessionEvent};
pub use merge::{FrontierPair, MergeSort};
pub use retrain::{RetrainMode, RetrainOutput, RetrainScheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sorting,
    Complete,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SessionOptions {
    pub retrain: RetrainMode,
    pub clock: Clock,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// The pair `i`, `j` needs a human judgment.
    NeedHuman { i: String, j: String, decision: PairDecision },
    /// The per-call automation limit was reached; call again.
    AutoResolving { resolved: usize },
    Complete { ranking: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScores {
    pub id: String,
    pub elo: f64,
    pub btl: f64,
    pub head: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<String>,
    pub complete: bool,
    pub budget_exhausted: bool,
    pub scores: Vec<ItemScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub n: usize,
    pub phase: Phase,
    pub human: u64,
    pub auto: u64,
    pub seed: u64,
    /// `auto / (human + auto)`, 0 before any comparison.
    pub automation_rate: f64,
    pub head_version: u64,
    pub gp_version: u64,
    pub gp_enabled: bool,
    pub budget: Option<u64>,
    pub budget_exhausted: bool,
    pub retrain_in_flight: bool,
    pub merge_pass: usize,
}

#[derive(Debug, Clone)]
struct Outstanding {
    pair: FrontierPair,
    decision: PairDecision,
}

/// Refits the head or the GP on a comparison prefix.
pub fn retrain_models(
    features: &[Vec<f64>],
    initial_order: &[ItemIndex],
    data: &[IndexedComparison],
    config: &SessionConfig,
    trained_on: usize,
    target: RetrainTarget,
) -> RetrainOutput {
    let (head, gp) = match target {
        RetrainTarget::Head => (Some(train_head(features, data, &config.head, config.rng_seed, 0)), None),
        RetrainTarget::Gp if config.gp_enabled => (None, GpState::fit(features, initial_order, data, config.gp).ok()),
        RetrainTarget::Gp => (None, None),
    };
    RetrainOutput {
        trained_on,
        target,
        head,
        gp,
    }
}

/// Requested and installed prefix lengths for one retrain target.
#[derive(Debug, Default)]
struct RetrainTrack {
    requested: usize,
    installed: usize,
    version: u64,
}

fn pair_key(i: ItemIndex, j: ItemIndex) -> (ItemIndex, ItemIndex) {
    (i.min(j), i.max(j))
}

#[derive(Debug)]
pub struct Session {
    id: String,
    config: SessionConfig,
    weights: ModelWeights,
    items: Vec<Item>,
    index: HashMap<String, ItemIndex>,
    features: Arc<Vec<Vec<f64>>>,
    initial_order: Vec<ItemIndex>,
    models: ModelSet,
    merge: MergeSort,
    records: Vec<ComparisonRecord>,
    indexed: Vec<IndexedComparison>,
    known: HashMap<(ItemIndex, ItemIndex), ItemIndex>,
    history: QueryHistory,
    top_set: TopSet,
    outstanding: Option<Outstanding>,
    human: u64,
    auto: u64,
    seed: u64,
    phase: Phase,
    budget_exhausted: bool,
    final_order: Option<Vec<ItemIndex>>,
    events: Vec<SessionEvent>,
    flushed: usize,
    replaying: bool,
    scheduler: RetrainScheduler,
    gp_scheduler: RetrainScheduler,
    clock: Clock,
    head_track: RetrainTrack,
    gp_track: RetrainTrack,
}

impl Session {
    pub fn new(id: impl Into<String>, items: Vec<Item>, config: SessionConfig, options: SessionOptions) -> Result<Self> {
        let clock = options.clock;
        let now = clock.now(0);
        let mut s = Self::build(id.into(), items, config, options, now)?;
        s.emit(EventKind::Created {
            config: s.config.clone(),
            items: s.items.clone(),
        });
        Ok(s)
    }

    fn build(id: String, items: Vec<Item>, config: SessionConfig, options: SessionOptions, created_at: u64) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyItems)?;
        let mut cfg = config;
        cfg.n = items.len();
        cfg.feature_dim = first.features.len();
        cfg.bins = first.prompt_scores.len();
        let cfg = validate_config(&cfg)?;
        let mut index = HashMap::with_capacity(items.len());
        for (k, it) in items.iter().enumerate() {
            it.validate(cfg.feature_dim, cfg.bins)?;
            if index.insert(it.id.clone(), k).is_some() {
                return Err(Error::InvalidInput(format!("duplicate item id {}", it.id)));
            }
        }
        let n = items.len();
        let features: Arc<Vec<Vec<f64>>> = Arc::new(items.iter().map(|it| it.features.clone()).collect());

        let (initial_order, seed_edges, ratings) = if cfg.prior_enabled {
            let pre = build_preorder(&items, &cfg)?;
            let ratings = init_elo_ratings(&pre, cfg.rng_seed);
            (pre.initial_order, pre.seed_edges, ratings)
        } else {
            ((0..n).collect(), Vec::new(), vec![ELO_BASE; n])
        };

        let gp = if cfg.gp_enabled {
            let active = crate::gp::select_active(n, &initial_order, &[], cfg.gp.max_active);
            Some(GpState::prior(n, &features, active, cfg.gp)?)
        } else {
            None
        };
        let models = ModelSet {
            elo: EloState::new(ratings),
            btl: BtlState::new(n),
            gp,
            head: HeadModel::new(cfg.feature_dim, cfg.head.hidden, cfg.rng_seed),
        };

        let mut s = Self {
            id,
            weights: cfg.weights(),
            config: cfg,
            items,
            index,
            features,
            merge: MergeSort::new(&initial_order),
            initial_order,
            models,
            records: Vec::new(),
            indexed: Vec::new(),
            known: HashMap::new(),
            history: QueryHistory::new(),
            top_set: TopSet::empty(n),
            outstanding: None,
            human: 0,
            auto: 0,
            seed: 0,
            phase: Phase::Sorting,
            budget_exhausted: false,
            final_order: None,
            events: Vec::new(),
            flushed: 0,
            replaying: false,
            scheduler: RetrainScheduler::new(options.retrain),
            gp_scheduler: RetrainScheduler::new(options.retrain),
            clock: options.clock,
            head_track: RetrainTrack::default(),
            gp_track: RetrainTrack::default(),
        };

        for edge in &seed_edges {
            let record = ComparisonRecord {
                seq: s.records.len() as u64,
                i: s.items[edge.winner].id.clone(),
                j: s.items[edge.loser].id.clone(),
                y: Outcome::FirstWins,
                weight: edge.weight,
                source: Source::Seed,
                diagnostics: None,
                timestamp: created_at,
            };
            s.apply_record(record)?;
        }
        if !seed_edges.is_empty() {
            // initial fit on the seed edges, before any retrain is counted
            for target in [RetrainTarget::Head, RetrainTarget::Gp] {
                let out = retrain_models(&s.features, &s.initial_order, &s.indexed, &s.config, s.indexed.len(), target);
                if let Some(head) = out.head {
                    s.models.head = head;
                }
                if out.gp.is_some() {
                    s.models.gp = out.gp;
                }
            }
        }
        s.refresh_top_set();
        s.settle_known();
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_complete(&self) -> bool {
        self.phase == Phase::Complete
    }

    pub fn records(&self) -> &[ComparisonRecord] {
        &self.records
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn initial_order(&self) -> Vec<String> {
        self.initial_order.iter().map(|&i| self.items[i].id.clone()).collect()
    }

    pub fn models(&self) -> &ModelSet {
        &self.models
    }

    pub fn head_version(&self) -> u64 {
        self.head_track.version
    }

    pub fn gp_version(&self) -> u64 {
        self.gp_track.version
    }

    pub fn retrain_in_flight(&self) -> bool {
        self.scheduler.in_flight() || self.gp_scheduler.in_flight()
    }

    /// Events not yet handed out by this method.
    pub fn take_unflushed(&mut self) -> Vec<SessionEvent> {
        let out = self.events[self.flushed..].to_vec();
        self.flushed = self.events.len();
        out
    }

    pub fn human_count(&self) -> u64 {
        self.human
    }

    pub fn auto_count(&self) -> u64 {
        self.auto
    }

    pub fn seed_count(&self) -> u64 {
        self.seed
    }

    fn emit(&mut self, kind: EventKind) {
        if self.replaying {
            return;
        }
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent {
            seq,
            session_id: self.id.clone(),
            timestamp: self.clock.now(seq),
            kind,
        });
    }

    fn now(&self) -> u64 {
        self.clock.now(self.events.len() as u64)
    }

    pub fn lookup(&self, id: &str) -> Result<ItemIndex> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownItem(id.to_string()))
    }

    fn ids(&self, order: &[ItemIndex]) -> Vec<String> {
        order.iter().map(|&i| self.items[i].id.clone()).collect()
    }

    /// Applies a resolved comparison to every piece of derived state.
    fn apply_record(&mut self, record: ComparisonRecord) -> Result<()> {
        if record.seq != self.records.len() as u64 {
            return Err(Error::InvalidInput(format!(
                "record seq {} out of order, expected {}",
                record.seq,
                self.records.len()
            )));
        }
        let i = self.lookup(&record.i)?;
        let j = self.lookup(&record.j)?;
        let first_wins = record.y.first_wins();
        let source = record.source;
        if source != Source::Seed {
            let pair = self
                .merge
                .find(i, j)
                .ok_or_else(|| Error::InvalidInput(format!("pair ({}, {}) is not pending", record.i, record.j)))?;
            let winner = if first_wins { i } else { j };
            self.merge.resolve(pair.merge, winner == pair.left);
        }
        if source != Source::Auto || self.config.update_on_auto {
            self.models.elo.update(i, j, first_wins, record.weight)?;
            self.models.btl.record(i, j, first_wins, record.weight)?;
        }
        let seq = record.seq;
        self.known.insert(pair_key(i, j), if first_wins { i } else { j });
        match source {
            Source::Human => {
                self.human += 1;
                self.history.record_query(i, j, seq);
            }
            Source::Auto => {
                self.auto += 1;
                self.history.touch(i, seq);
                self.history.touch(j, seq);
            }
            Source::Seed => self.seed += 1,
        }
        self.indexed.push(IndexedComparison {
            i,
            j,
            first_wins,
            weight: record.weight,
        });
        self.records.push(record);

        if source != Source::Seed {
            let resolved = self.human + self.auto;
            if resolved % self.config.automation.top_set_refresh.max(1) == 0 {
                self.refresh_top_set();
            }
            if resolved % self.config.head.retrain_period == 0 {
                self.request_retrain(RetrainTarget::Head);
            }
            if self.config.gp_enabled && resolved % self.config.gp.refit_period == 0 {
                self.request_retrain(RetrainTarget::Gp);
            }
            self.settle_known();
        }
        Ok(())
    }

    /// Resolves frontier pairs whose outcome is already on record.
    fn settle_known(&mut self) {
        if !self.config.resolve_known_outcomes || self.known.is_empty() {
            return;
        }
        loop {
            let hit = self
                .merge
                .frontier()
                .into_iter()
                .find_map(|p| self.known.get(&pair_key(p.left, p.right)).map(|&w| (p, w)));
            match hit {
                Some((p, winner)) => {
                    self.merge.resolve(p.merge, winner == p.left);
                }
                None => return,
            }
        }
    }

    fn refresh_top_set(&mut self) {
        if self.models.btl.is_stale() {
            self.models.btl.refit();
        }
        let scores = self.models.consensus_scores(&self.features, &self.weights);
        self.top_set = TopSet::from_scores(&scores);
    }

    fn training_data(&self, upto: usize) -> Vec<IndexedComparison> {
        self.records[..upto]
            .iter()
            .zip(&self.indexed)
            .filter(|(r, _)| r.source != Source::Auto || self.config.update_on_auto)
            .map(|(_, c)| *c)
            .collect()
    }

    fn track(&mut self, target: RetrainTarget) -> &mut RetrainTrack {
        match target {
            RetrainTarget::Head => &mut self.head_track,
            RetrainTarget::Gp => &mut self.gp_track,
        }
    }

    fn scheduler_for(&mut self, target: RetrainTarget) -> &mut RetrainScheduler {
        match target {
            RetrainTarget::Head => &mut self.scheduler,
            RetrainTarget::Gp => &mut self.gp_scheduler,
        }
    }

    fn request_retrain(&mut self, target: RetrainTarget) {
        let trained_on = self.indexed.len();
        self.track(target).requested = trained_on;
        self.emit(EventKind::RetrainStarted { trained_on, target });
        self.schedule_retrain(trained_on, target);
    }

    fn schedule_retrain(&mut self, trained_on: usize, target: RetrainTarget) {
        if self.scheduler_for(target).mode() == RetrainMode::Manual {
            return;
        }
        let data = self.training_data(trained_on);
        let features = Arc::clone(&self.features);
        let order = self.initial_order.clone();
        let config = self.config.clone();
        self.scheduler_for(target).request(
            trained_on,
            Box::new(move || retrain_models(&features, &order, &data, &config, trained_on, target)),
        );
    }

    fn install(&mut self, out: RetrainOutput) {
        let track = self.track(out.target);
        track.version += 1;
        track.installed = out.trained_on;
        let version = track.version;
        if let Some(mut head) = out.head {
            head.version = version;
            self.models.head = head;
        }
        if out.gp.is_some() {
            self.models.gp = out.gp;
        }
        self.emit(EventKind::RetrainDone {
            trained_on: out.trained_on,
            version,
            target: out.target,
        });
    }

    /// Installs any finished retrain. Never blocks.
    pub fn poll_retrain(&mut self) {
        while let Some(out) = self.scheduler.poll() {
            self.install(out);
        }
        while let Some(out) = self.gp_scheduler.poll() {
            self.install(out);
        }
    }

    /// Blocks until no retrain is running and installs the results.
    pub fn wait_for_retrain(&mut self) {
        while let Some(out) = self.scheduler.wait() {
            self.install(out);
        }
        while let Some(out) = self.gp_scheduler.wait() {
            self.install(out);
        }
    }

    fn budget_spent(&self) -> bool {
        self.config.budget.is_some_and(|b| self.human + self.auto >= b)
    }

    fn finalize(&mut self, budget_exhausted: bool) {
        let order = self.merge.current_order();
        self.phase = Phase::Complete;
        self.budget_exhausted = budget_exhausted;
        self.outstanding = None;
        let ranking = self.ids(&order);
        self.final_order = Some(order);
        self.emit(EventKind::Completed {
            ranking,
            budget_exhausted,
        });
    }

    fn theta_eff(&self, i: ItemIndex, j: ItemIndex) -> f64 {
        self.config.theta_base() + self.top_set.boost(i, j, &self.config.automation)
    }

    fn decide(&self, p: &FrontierPair) -> Result<PairDecision> {
        self.models.decide(
            &self.features,
            p.left,
            p.right,
            &self.weights,
            &self.config.automation,
            self.theta_eff(p.left, p.right),
        )
    }

    fn next_record(&self, p: &FrontierPair, left_wins: bool, source: Source, decision: PairDecision) -> ComparisonRecord {
        ComparisonRecord {
            seq: self.records.len() as u64,
            i: self.items[p.left].id.clone(),
            j: self.items[p.right].id.clone(),
            y: Outcome::from_first_wins(left_wins),
            weight: 1.0,
            source,
            diagnostics: Some(decision),
            timestamp: self.now(),
        }
    }

    /// Advances the sort until a human judgment is needed, the per-call
    /// automation limit is hit, or the sort completes.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let mut resolved = 0usize;
        loop {
            self.poll_retrain();
            if self.phase == Phase::Complete {
                return Ok(StepOutcome::Complete {
                    ranking: self.ids(self.final_order.as_deref().unwrap_or(&[])),
                });
            }
            if let Some(o) = &self.outstanding {
                return Ok(StepOutcome::NeedHuman {
                    i: self.items[o.pair.left].id.clone(),
                    j: self.items[o.pair.right].id.clone(),
                    decision: o.decision.clone(),
                });
            }
            if self.budget_spent() {
                self.finalize(true);
                continue;
            }
            if self.merge.is_done() {
                self.finalize(false);
                continue;
            }
            if self.models.btl.is_stale() {
                self.models.btl.refit();
            }
            let frontier = self.merge.frontier();
            let evaluate_all = self.config.automation_enabled || self.config.selection_enabled;
            let mut decisions = Vec::with_capacity(frontier.len());
            let mut auto = None;
            for p in frontier.iter().take(if evaluate_all { usize::MAX } else { 1 }) {
                let d = self.decide(p)?;
                if self.config.automation_enabled && d.verdict.is_auto() {
                    auto = Some((*p, d));
                    break;
                }
                decisions.push((*p, d));
            }
            if let Some((p, d)) = auto {
                if resolved >= self.config.max_auto_per_step {
                    return Ok(StepOutcome::AutoResolving { resolved });
                }
                let record = self.next_record(&p, d.p_ens > 0.5, Source::Auto, d);
                self.emit(EventKind::AutoResolved { record: record.clone() });
                self.apply_record(record)?;
                resolved += 1;
                continue;
            }

            let chosen = if self.config.selection_enabled {
                let candidates: Vec<Candidate> = decisions
                    .iter()
                    .map(|(p, d)| Candidate {
                        i: p.left,
                        j: p.right,
                        p_ens: d.p_ens,
                        votes: d.per_model.clone(),
                        info_gain: self.models.gp.as_ref().and_then(|gp| gp.info_gain(p.left, p.right)),
                    })
                    .collect();
                let ids: Vec<String> = self.items.iter().map(|it| it.id.clone()).collect();
                let (k, utility) = select_next(&candidates, &ids, &self.history, &self.weights, &self.config.utility_weights)?;
                let (p, mut d) = decisions.swap_remove(k);
                d.utility = Some(utility);
                (p, d)
            } else {
                decisions.swap_remove(0)
            };
            let (p, decision) = chosen;
            self.emit(EventKind::PairIssued {
                i: self.items[p.left].id.clone(),
                j: self.items[p.right].id.clone(),
                decision: decision.clone(),
            });
            self.outstanding = Some(Outstanding { pair: p, decision });
        }
    }

    /// The pair currently awaiting a human, if any.
    pub fn outstanding(&self) -> Option<(String, String)> {
        self.outstanding
            .as_ref()
            .map(|o| (self.items[o.pair.left].id.clone(), self.items[o.pair.right].id.clone()))
    }

    /// Records a human judgment for the outstanding pair, given in either
    /// orientation. `i_wins` refers to `i` as passed.
    pub fn submit_judgment(&mut self, i: &str, j: &str, i_wins: bool) -> Result<ComparisonRecord> {
        if self.phase == Phase::Complete {
            return Err(Error::SessionComplete);
        }
        let o = self.outstanding.as_ref().ok_or(Error::NoOutstandingPair)?;
        let (left, right) = (o.pair.left, o.pair.right);
        let stale = || Error::StalePair {
            expected_i: self.items[left].id.clone(),
            expected_j: self.items[right].id.clone(),
        };
        let (a, b) = match (self.lookup(i), self.lookup(j)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(stale()),
        };
        let left_wins = if (a, b) == (left, right) {
            i_wins
        } else if (a, b) == (right, left) {
            !i_wins
        } else {
            return Err(stale());
        };
        let o = self.outstanding.take().expect("checked above");
        let record = self.next_record(&o.pair, left_wins, Source::Human, o.decision);
        self.emit(EventKind::Judgment { record: record.clone() });
        self.apply_record(record.clone())?;
        Ok(record)
    }

    fn scores(&mut self, order: &[ItemIndex]) -> Vec<ItemScores> {
        if self.models.btl.is_stale() {
            self.models.btl.refit();
        }
        let strengths = self.models.btl.strengths();
        order
            .iter()
            .map(|&i| ItemScores {
                id: self.items[i].id.clone(),
                elo: self.models.elo.ratings[i],
                btl: strengths[i],
                head: self.models.head.score(&self.features[i]).unwrap_or(0.5),
                gp: self.models.gp.as_ref().filter(|g| g.fitted).and_then(|g| g.mean_of(i)),
            })
            .collect()
    }

    /// Ranking so far, best first; complete only once the sort has finished.
    pub fn current_ranking(&mut self) -> Ranking {
        let order = self.final_order.clone().unwrap_or_else(|| self.merge.current_order());
        Ranking {
            order: self.ids(&order),
            complete: self.phase == Phase::Complete,
            budget_exhausted: self.budget_exhausted,
            scores: self.scores(&order),
        }
    }

    pub fn final_ranking(&mut self) -> Result<Ranking> {
        if self.phase != Phase::Complete {
            return Err(Error::NotComplete);
        }
        Ok(self.current_ranking())
    }

    pub fn stats(&self) -> SessionStats {
        let resolved = self.human + self.auto;
        SessionStats {
            n: self.items.len(),
            phase: self.phase,
            human: self.human,
            auto: self.auto,
            seed: self.seed,
            automation_rate: if resolved == 0 { 0.0 } else { self.auto as f64 / resolved as f64 },
            head_version: self.head_track.version,
            gp_version: self.gp_track.version,
            gp_enabled: self.config.gp_enabled,
            budget: self.config.budget,
            budget_exhausted: self.budget_exhausted,
            retrain_in_flight: self.retrain_in_flight(),
            merge_pass: self.merge.pass(),
        }
    }

    /// Rebuilds a session from its event log without running any retrain in
    /// the background; retrains recorded as installed are recomputed inline.
    pub fn replay(events: &[SessionEvent]) -> Result<Self> {
        let fail = |seq: u64, reason: String| Error::Replay { seq, reason };
        let first = events.first().ok_or_else(|| fail(0, "empty log".into()))?;
        let EventKind::Created { config, items } = &first.kind else {
            return Err(fail(first.seq, "first event is not a creation".into()));
        };
        let options = SessionOptions {
            retrain: RetrainMode::Manual,
            clock: Clock::Logical,
        };
        let mut s = Self::build(first.session_id.clone(), items.clone(), config.clone(), options, first.timestamp)
            .map_err(|e| fail(first.seq, e.to_string()))?;
        s.replaying = true;
        let mut seen = HashSet::new();
        for (k, e) in events.iter().enumerate() {
            if e.seq != k as u64 || e.session_id != s.id || !seen.insert(e.seq) {
                return Err(fail(e.seq, "sequence or session id mismatch".into()));
            }
            if k == 0 {
                continue;
            }
            s.replay_event(e).map_err(|err| match err {
                Error::Replay { .. } => err,
                other => fail(e.seq, other.to_string()),
            })?;
        }
        s.replaying = false;
        s.events = events.to_vec();
        s.flushed = s.events.len();
        Ok(s)
    }

    fn replay_event(&mut self, e: &SessionEvent) -> Result<()> {
        let fail = |reason: &str| Error::Replay {
            seq: e.seq,
            reason: reason.to_string(),
        };
        let bookkeeping = matches!(e.kind, EventKind::RetrainStarted { .. } | EventKind::RetrainDone { .. });
        if self.phase == Phase::Complete && !bookkeeping {
            return Err(fail("event after completion"));
        }
        match &e.kind {
            EventKind::Created { .. } => return Err(fail("duplicate creation")),
            EventKind::PairIssued { i, j, decision } => {
                if self.outstanding.is_some() {
                    return Err(fail("pair issued while another is outstanding"));
                }
                let pair = self.merge.find(self.lookup(i)?, self.lookup(j)?).ok_or_else(|| fail("issued pair is not pending"))?;
                self.outstanding = Some(Outstanding {
                    pair,
                    decision: decision.clone(),
                });
            }
            EventKind::Judgment { record } => {
                let o = self.outstanding.take().ok_or_else(|| fail("judgment without an issued pair"))?;
                let (i, j) = (self.lookup(&record.i)?, self.lookup(&record.j)?);
                if pair_key(i, j) != pair_key(o.pair.left, o.pair.right) || record.source != Source::Human {
                    return Err(fail("judgment does not match the issued pair"));
                }
                self.apply_record(record.clone())?;
            }
            EventKind::AutoResolved { record } => {
                if record.source != Source::Auto {
                    return Err(fail("automatic record with a different source"));
                }
                self.apply_record(record.clone())?;
            }
            EventKind::RetrainStarted { .. } => {}
            EventKind::RetrainDone {
                trained_on,
                version,
                target,
            } => {
                if *trained_on > self.indexed.len() || *version != self.track(*target).version + 1 {
                    return Err(fail("retrain does not fit the log"));
                }
                let data = self.training_data(*trained_on);
                let out = retrain_models(&self.features, &self.initial_order, &data, &self.config, *trained_on, *target);
                self.install(out);
            }
            EventKind::Completed {
                ranking,
                budget_exhausted,
            } => {
                self.finalize(*budget_exhausted);
                let order = self.final_order.clone().unwrap_or_default();
                if &self.ids(&order) != ranking {
                    return Err(fail("final ranking differs from the log"));
                }
            }
        }
        Ok(())
    }

    /// Replays a log and continues the session live. A retrain requested
    /// but not installed before the log ended is started again.
    pub fn resume(events: &[SessionEvent], options: SessionOptions) -> Result<Self> {
        let mut s = Self::replay(events)?;
        s.scheduler.set_mode(options.retrain);
        s.gp_scheduler.set_mode(options.retrain);
        s.clock = options.clock;
        for target in [RetrainTarget::Head, RetrainTarget::Gp] {
            let sorting = s.phase == Phase::Sorting;
            let track = s.track(target);
            if track.requested > track.installed && sorting {
                let trained_on = track.requested;
                s.emit(EventKind::RetrainStarted { trained_on, target });
                s.schedule_retrain(trained_on, target);
            }
        }
        Ok(s)
    }
}
