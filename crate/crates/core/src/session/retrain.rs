//! Scheduling of head and GP retrains.
//!
//! At most one retrain runs at a time. A request arriving while one is in
//! flight replaces any earlier waiting request, so bursts coalesce into a
//! single follow-up run.

use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::events::RetrainTarget;
use crate::gp::GpState;
use crate::head::HeadModel;

/// A finished retrain over the first `trained_on` comparisons of the log.
/// Only the model named by `target` is filled in.
#[derive(Debug, Clone)]
pub struct RetrainOutput {
    pub trained_on: usize,
    pub target: RetrainTarget,
    pub head: Option<HeadModel>,
    pub gp: Option<GpState>,
}

pub type RetrainJob = Box<dyn FnOnce() -> RetrainOutput + Send + 'static>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetrainMode {
    /// Run on the caller's thread at request time; install at the next poll.
    #[default]
    Inline,
    /// Run on a worker thread, optionally sleeping first.
    Background { delay: Duration },
    /// Never run; the caller installs results itself.
    Manual,
}

struct InFlight {
    trained_on: usize,
    handle: JoinHandle<RetrainOutput>,
}

pub struct RetrainScheduler {
    mode: RetrainMode,
    in_flight: Option<InFlight>,
    waiting: Option<(usize, RetrainJob)>,
    ready: Option<RetrainOutput>,
    started: u64,
}

impl std::fmt::Debug for RetrainScheduler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RetrainScheduler")
            .field("mode", &self.mode)
            .field("in_flight", &self.in_flight.as_ref().map(|j| j.trained_on))
            .field("waiting", &self.waiting.as_ref().map(|w| w.0))
            .field("started", &self.started)
            .finish()
    }
}

impl RetrainScheduler {
    pub fn new(mode: RetrainMode) -> Self {
        Self {
            mode,
            in_flight: None,
            waiting: None,
            ready: None,
            started: 0,
        }
    }

    pub fn mode(&self) -> RetrainMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: RetrainMode) {
        self.mode = mode;
    }

    /// Number of retrains actually started.
    pub fn started(&self) -> u64 {
        self.started
    }

    pub fn in_flight(&self) -> bool {
        self.in_flight.is_some()
    }

    pub fn waiting(&self) -> Option<usize> {
        self.waiting.as_ref().map(|w| w.0)
    }

    pub fn request(&mut self, trained_on: usize, job: RetrainJob) {
        match self.mode {
            RetrainMode::Inline => {
                self.started += 1;
                self.ready = Some(job());
            }
            RetrainMode::Background { delay } => {
                if self.in_flight.is_some() {
                    self.waiting = Some((trained_on, job));
                } else {
                    self.spawn(trained_on, job, delay);
                }
            }
            RetrainMode::Manual => {}
        }
    }

    fn spawn(&mut self, trained_on: usize, job: RetrainJob, delay: Duration) {
        self.started += 1;
        let handle = thread::spawn(move || {
            if !delay.is_zero() {
                thread::sleep(delay);
            }
            job()
        });
        self.in_flight = Some(InFlight { trained_on, handle });
    }

    /// A finished retrain, if any; never blocks.
    pub fn poll(&mut self) -> Option<RetrainOutput> {
        if let Some(out) = self.ready.take() {
            return Some(out);
        }
        let finished = self.in_flight.as_ref().is_some_and(|j| j.handle.is_finished());
        if !finished {
            return None;
        }
        self.collect()
    }

    /// Blocks until the in-flight retrain (if any) finishes.
    pub fn wait(&mut self) -> Option<RetrainOutput> {
        if let Some(out) = self.ready.take() {
            return Some(out);
        }
        self.in_flight.as_ref()?;
        self.collect()
    }

    fn collect(&mut self) -> Option<RetrainOutput> {
        let job = self.in_flight.take()?;
        let out = job.handle.join().ok();
        if let (Some((trained_on, next)), RetrainMode::Background { delay }) = (self.waiting.take(), self.mode) {
            self.spawn(trained_on, next, delay);
        }
        out
    }
}
