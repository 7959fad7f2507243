use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use hilrank_core::session::{Clock, RetrainMode, Session, SessionOptions, StepOutcome};
use hilrank_core::sim::{run_experiment, ExperimentConfig, Policy, WorldConfig};
use hilrank_core::SessionConfig;
use hilrank_service::error::{Result, ServiceError};
use hilrank_service::report::{compare, effgain_report, load_truth, summarize};
use hilrank_service::store::{append_log, read_log, write_log};
use hilrank_service::{ingest_features, AppState, EventStore, ServiceOptions};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hilrank", version, about = "Human-in-the-loop pairwise ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session against a synthetic oracle and write a JSON report.
    Simulate {
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Oracle flip probability ε.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Prompt-score noise η.
        #[arg(long, default_value_t = 0.05)]
        prior_noise: f64,
        /// guided, plain_mergesort or random_pairs.
        #[arg(long, default_value = "guided")]
        policy: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Session event log (JSONL).
        #[arg(long)]
        log: Option<PathBuf>,
        /// τ-vs-human-comparisons curve (CSV).
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        curve_every: u64,
        /// Pairs drawn by random_pairs.
        #[arg(long)]
        random_budget: Option<u64>,
        /// Session configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rank a JSONL item file from the terminal.
    Rank {
        #[arg(long)]
        features: PathBuf,
        /// Ask for judgments on stdin; otherwise print the prompt-score order.
        #[arg(long)]
        interactive: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Event log; an existing log is resumed.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "HILRANK_STORE", default_value = "hilrank-store")]
        store: PathBuf,
        /// Extra delay before each background retrain.
        #[arg(long, default_value_t = 0)]
        retrain_delay_ms: u64,
    },
    /// Rebuild a session from its log and print the result.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Summarize one or two logs, or compute EffGain from given numbers.
    Report {
        /// First log is ours, second the baseline.
        #[arg(long)]
        log: Vec<PathBuf>,
        /// Ground truth: id array, id→score object, or a simulation report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, requires_all = ["tau_ours", "tau_base", "delta_hc"])]
        n: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        tau_ours: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        tau_base: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_hc: Option<f64>,
    },
}

fn read_config(path: Option<&Path>) -> Result<SessionConfig> {
    match path {
        Some(p) => Ok(serde_json::from_slice(&std::fs::read(p)?)?),
        None => Ok(SessionConfig::default()),
    }
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => {
            if let Err(e) = writeln!(io::stdout().lock(), "{text}") {
                if e.kind() != io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    n: usize,
    noise: f64,
    prior_noise: f64,
    policy: Policy,
    seed: u64,
    out: Option<&Path>,
    log: Option<&Path>,
    curve: Option<&Path>,
    curve_every: u64,
    random_budget: Option<u64>,
    config: Option<&Path>,
) -> Result<()> {
    let world = WorldConfig {
        n,
        oracle_noise: noise,
        prior_noise,
        seed,
        ..WorldConfig::default()
    };
    let mut cfg = ExperimentConfig::new(world, policy);
    cfg.session = read_config(config)?;
    cfg.random_budget = random_budget;
    cfg.curve_every = curve.map(|_| curve_every);
    let run = run_experiment(&cfg)?;
    let r = &run.report;
    eprintln!(
        "{policy}: n={n} tau={:.4} human={} auto={} elapsed={:.3}s",
        r.tau,
        r.human,
        r.auto,
        r.elapsed.as_secs_f64()
    );
    write_json(out, r)?;
    if let Some(path) = log {
        if run.events.is_empty() {
            return Err(ServiceError::BadRequest(format!("{policy} produces no session log")));
        }
        write_log(path, &run.events)?;
    }
    if let Some(path) = curve {
        let mut w = csv::Writer::from_path(path)?;
        for p in &r.curve {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn rank(features: &Path, interactive: bool, config: Option<&Path>, log: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let options = SessionOptions {
        retrain: RetrainMode::Inline,
        clock: Clock::Wall,
    };
    let mut session = match log {
        Some(p) if p.exists() => Session::resume(&read_log(p)?, options)?,
        _ => {
            let items = ingest_features(features)?;
            Session::new("cli", items, read_config(config)?, options)?
        }
    };
    let flush = |s: &mut Session| -> Result<()> {
        match log {
            Some(p) => append_log(p, &s.take_unflushed()),
            None => Ok(()),
        }
    };
    flush(&mut session)?;
    if !interactive {
        let order = session.initial_order();
        return write_json(out, &json!({ "ranking": order, "complete": false, "source": "prompt_scores" }));
    }

    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let ranking = loop {
        match session.step()? {
            StepOutcome::NeedHuman { i, j, .. } => {
                let stats = session.stats();
                print!(
                    "[{} human, {} auto] which ranks higher?  1) {i}   2) {j}   (q to stop): ",
                    stats.human, stats.auto
                );
                io::stdout().flush()?;
                let answer = match lines.next() {
                    Some(line) => line?,
                    None => String::from("q"),
                };
                match answer.trim() {
                    "1" => {
                        session.submit_judgment(&i, &j, true)?;
                    }
                    "2" => {
                        session.submit_judgment(&i, &j, false)?;
                    }
                    "q" => {
                        flush(&mut session)?;
                        println!();
                        eprintln!("stopped; progress saved{}", if log.is_some() { " to the log" } else { " nowhere (no --log)" });
                        let partial = session.current_ranking();
                        return write_json(out, &json!({ "ranking": partial.order, "complete": false }));
                    }
                    _ => println!("please answer 1, 2 or q"),
                }
                flush(&mut session)?;
            }
            StepOutcome::AutoResolving { .. } => {}
            StepOutcome::Complete { ranking } => break ranking,
        }
    };
    flush(&mut session)?;
    write_json(out, &json!({ "ranking": ranking, "complete": true }))
}

fn serve(port: u16, host: &str, store: &Path, retrain_delay_ms: u64) -> Result<()> {
    let options = ServiceOptions {
        retrain: RetrainMode::Background {
            delay: Duration::from_millis(retrain_delay_ms),
        },
        clock: Clock::Wall,
    };
    let state = Arc::new(AppState::new(EventStore::open(store)?, options));
    let resumed = state.load_existing()?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        eprintln!(
            "listening on http://{} (store {}, {} sessions resumed)",
            listener.local_addr()?,
            store.display(),
            resumed.len()
        );
        hilrank_service::serve(listener, state).await?;
        Ok(())
    })
}

fn replay(log: &Path) -> Result<()> {
    let events = read_log(log)?;
    let mut session = Session::replay(&events)?;
    let ranking = session.current_ranking();
    write_json(
        None,
        &json!({
            "session_id": session.id(),
            "complete": ranking.complete,
            "ranking": ranking.order,
            "stats": session.stats(),
        }),
    )
}

fn report(
    logs: &[PathBuf],
    truth: Option<&Path>,
    n: Option<usize>,
    tau_ours: Option<f64>,
    tau_base: Option<f64>,
    delta_hc: Option<f64>,
) -> Result<()> {
    if let (Some(n), Some(a), Some(b), Some(d)) = (n, tau_ours, tau_base, delta_hc) {
        return write_json(None, &effgain_report(n, a, b, d)?);
    }
    if logs.is_empty() || logs.len() > 2 {
        return Err(ServiceError::BadRequest("give one or two --log paths, or --n/--tau-ours/--tau-base/--delta-hc".into()));
    }
    let truth = truth.map(load_truth).transpose()?;
    let summaries = logs
        .iter()
        .map(|p| summarize(&read_log(p)?, truth.as_deref()))
        .collect::<Result<Vec<_>>>()?;
    // EffGain is undefined unless the first log used more human comparisons.
    let (effgain, note) = match summaries.as_slice() {
        [ours, base] if truth.is_some() => match compare(ours, base) {
            Ok(g) => (Some(g), None),
            Err(ServiceError::Core(e @ hilrank_core::Error::UndefinedMetric(_))) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        },
        _ => (None, None),
    };
    write_json(None, &json!({ "sessions": summaries, "effgain": effgain, "effgain_note": note }))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            noise,
            prior_noise,
            policy,
            seed,
            out,
            log,
            curve,
            curve_every,
            random_budget,
            config,
        } => simulate(
            n,
            noise,
            prior_noise,
            policy,
            seed,
            out.as_deref(),
            log.as_deref(),
            curve.as_deref(),
            curve_every,
            random_budget,
            config.as_deref(),
        ),
        Command::Rank {
            features,
            interactive,
            config,
            log,
            out,
        } => rank(&features, interactive, config.as_deref(), log.as_deref(), out.as_deref()),
        Command::Serve {
            port,
            host,
            store,
            retrain_delay_ms,
        } => serve(port, &host, &store, retrain_delay_ms),
        Command::Replay { log } => replay(&log),
        Command::Report {
            log,
            truth,
            n,
            tau_ours,
            tau_base,
            delta_hc,
        } => report(&log, truth.as_deref(), n, tau_ours, tau_base, delta_hc),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
