//! Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{background, create_body, store_dir, world, Server};
use hilrank_core::btl::BtlState;
use hilrank_core::config::{AutomationConfig, GpConfig, GpMode};
use hilrank_core::elo::{EloState, K_INITIAL, K_SETTLED};
use hilrank_core::ensemble::{combine, ModelSet, MAX_ENSEMBLE_CONFIDENCE};
use hilrank_core::gp::{fit_map, kernel_matrix, map_objective, GpState, LatentPrior, Preference};
use hilrank_core::head::HeadModel;
use hilrank_core::session::{Clock, RetrainMode, Session, SessionOptions, StepOutcome};
use hilrank_core::sim::{effgain, run_experiment, ExperimentConfig, Policy, SyntheticWorld, WorldConfig};
use hilrank_core::{IndexedComparison, ModelKind, ModelVote, ModelWeights, SessionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn experiment(n: usize, noise: f64, seed: u64, policy: Policy) -> ExperimentConfig {
    let world = WorldConfig {
        n,
        oracle_noise: noise,
        seed,
        ..WorldConfig::default()
    };
    ExperimentConfig::new(world, policy)
}

fn exact_sort() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [16usize, 50, 100] {
        let r = run_experiment(&experiment(n, 0.0, 1, Policy::PlainMergesort)).map_err(err)?.report;
        let cap = n as u64 * (n as f64).log2().ceil() as u64;
        let secs = r.elapsed.as_secs_f64();
        ok &= r.tau == 1.0 && r.human <= cap && r.auto == 0 && secs < 5.0;
        lines.push(format!("n={n}: tau={} human={}/{cap} {secs:.2}s", r.tau, r.human));
    }
    check(ok, lines.join("; "))
}

fn automation_envelope() -> Outcome {
    let n = 100;
    let cap = 0.75 * n as f64 * (n as f64).log2();
    let (mut rate, mut human, mut tau, mut slowest) = (0.0, 0.0, 0.0, 0.0f64);
    let seeds = 10;
    for seed in 0..seeds {
        let r = run_experiment(&experiment(n, 0.0, seed, Policy::Guided)).map_err(err)?.report;
        rate += r.automation_rate;
        human += r.human as f64;
        tau += r.tau;
        slowest = slowest.max(r.elapsed.as_secs_f64());
    }
    let k = seeds as f64;
    let (rate, human, tau) = (rate / k, human / k, tau / k);
    check(
        (0.25..=0.55).contains(&rate) && human <= cap && tau >= 0.95 && slowest < 60.0,
        format!("mean rate={rate:.3} human={human:.1} (cap {cap:.1}) tau={tau:.4}, slowest seed {slowest:.2}s"),
    )
}

fn effgain_table() -> Outcome {
    let a = effgain(0.8440, 0.671, 72.0, 100).map_err(err)?;
    let b = effgain(0.7935, 0.695, 50.0, 200).map_err(err)?;
    check(
        (a - 5.94).abs() <= 0.01 && (b - 19.6).abs() <= 0.1,
        format!("n=100: {a:.4}; n=200: {b:.4}"),
    )
}

/// One-sided sign test: P(X ≥ wins) for X ~ Bin(trials, ½).
fn sign_test(wins: u64, trials: u64) -> f64 {
    let mut p = 0.0;
    let mut coef = 1.0f64;
    for x in 0..=trials {
        if x > 0 {
            coef = coef * (trials - x + 1) as f64 / x as f64;
        }
        if x >= wins {
            p += coef;
        }
    }
    p / 2f64.powi(trials as i32)
}

fn selection_beats_random() -> Outcome {
    let (mut wins, mut losses, mut diff) = (0u64, 0u64, 0.0);
    let seeds = 20;
    for seed in 0..seeds {
        let ours = run_experiment(&experiment(100, 0.1, seed, Policy::Guided)).map_err(err)?.report;
        let mut base = experiment(100, 0.1, seed, Policy::RandomPairs);
        base.random_budget = Some(ours.human);
        let base = run_experiment(&base).map_err(err)?.report;
        if base.human != ours.human {
            return Err(format!("seed {seed}: budgets differ ({} vs {})", ours.human, base.human));
        }
        let d = ours.tau - base.tau;
        diff += d;
        if d > 0.0 {
            wins += 1;
        } else if d < 0.0 {
            losses += 1;
        }
    }
    let mean = diff / seeds as f64;
    let p = sign_test(wins, wins + losses);
    check(
        mean > 0.0 && p < 0.05,
        format!("mean tau diff={mean:.4}, {wins} wins / {losses} losses, sign test p={p:.2e}"),
    )
}

fn relative_gradient_error(f: &[f64], prefs: &[Preference], prior: &LatentPrior, noise: f64) -> f64 {
    let (_, g) = map_objective(f, prefs, prior, noise);
    let h = 1e-5;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..f.len() {
        let (mut up, mut down) = (f.to_vec(), f.to_vec());
        up[k] += h;
        down[k] -= h;
        let fd = (map_objective(&up, prefs, prior, noise).0 - map_objective(&down, prefs, prior, noise).0) / (2.0 * h);
        num += (fd - g[k]).powi(2);
        den += g[k].powi(2).max(fd * fd);
    }
    (num / den.max(1e-300)).sqrt()
}

/// Brute-force minimum over `[−3, 3]³`: a 0.1 grid, then a 0.01 grid around
/// the coarse winner. The objective is convex, so the refinement is exact.
fn grid_minimum(objective: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best = vec![0.0; 3];
    let mut best_v = f64::INFINITY;
    let mut step: f64 = 0.1;
    let (mut lo, mut hi) = ([-3.0; 3], [3.0; 3]);
    for _ in 0..2 {
        let steps: Vec<usize> = (0..3).map(|d| ((hi[d] - lo[d]) / step).round() as usize).collect();
        for a in 0..=steps[0] {
            for b in 0..=steps[1] {
                for c in 0..=steps[2] {
                    let f = [lo[0] + a as f64 * step, lo[1] + b as f64 * step, lo[2] + c as f64 * step];
                    let v = objective(&f);
                    if v < best_v {
                        best_v = v;
                        best = f.to_vec();
                    }
                }
            }
        }
        for d in 0..3 {
            lo[d] = (best[d] - 2.0 * step).max(-3.0);
            hi[d] = (best[d] + 2.0 * step).min(3.0);
        }
        step = 0.01;
    }
    best
}

fn gp_correctness() -> Outcome {
    let noise = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 6;
    let feats: Vec<Vec<f64>> = (0..m).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let pts: Vec<&[f64]> = feats.iter().map(|v| v.as_slice()).collect();
    let kernel = LatentPrior::kernel(kernel_matrix(&pts, &[1.0; 3], 1.0).map_err(err)?, 1e-6).map_err(err)?;
    let ridge = LatentPrior::Ridge(1.0);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let prefs: Vec<Preference> = (0..10)
            .map(|_| {
                let a = rng.gen_range(0..m);
                let b = (a + rng.gen_range(1..m)) % m;
                let weight = if rng.gen_bool(0.3) { 0.74 } else { 1.0 };
                Preference { winner: a, loser: b, weight }
            })
            .collect();
        let f: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        for prior in [&ridge, &kernel] {
            worst_grad = worst_grad.max(relative_gradient_error(&f, &prefs, prior, noise));
        }
    }

    let pref = |winner, loser| Preference { winner, loser, weight: 1.0 };
    let prefs = [pref(2, 1), pref(1, 0), pref(2, 0), pref(2, 1), pref(1, 0), pref(0, 1)];
    let tri = [[0.0, 0.2], [0.5, 0.1], [1.2, -0.3]];
    let tri_pts: Vec<&[f64]> = tri.iter().map(|v| v.as_slice()).collect();
    let tri_kernel = LatentPrior::kernel(kernel_matrix(&tri_pts, &[1.0, 1.0], 1.0).map_err(err)?, 1e-6).map_err(err)?;
    let mut worst_map: f64 = 0.0;
    for prior in [&ridge, &tri_kernel] {
        let fit = fit_map(3, &prefs, prior, noise, 100, 1e-5);
        let grid = grid_minimum(|f| map_objective(f, &prefs, prior, noise).0);
        for (a, b) in fit.mean.iter().zip(&grid) {
            worst_map = worst_map.max((a - b).abs());
        }
    }

    let mut asym = 0usize;
    for mode in [GpMode::Practical, GpMode::Full] {
        let n = 10;
        let feats: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let comps: Vec<IndexedComparison> = (0..40)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let j = (i + rng.gen_range(1..n)) % n;
                IndexedComparison { i, j, first_wins: rng.gen_bool(0.7), weight: 1.0 }
            })
            .collect();
        let cfg = GpConfig { mode, ..GpConfig::default() };
        let gp = GpState::fit(&feats, &(0..n).collect::<Vec<_>>(), &comps, cfg).map_err(err)?;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (gp.predict(i, j).ok_or("no prediction")?, gp.predict(j, i).ok_or("no prediction")?);
                if !antisymmetric(a.p, b.p) {
                    asym += 1;
                }
            }
        }
    }
    check(
        worst_grad < 1e-4 && worst_map < 1e-2 && asym == 0,
        format!("max grad rel err={worst_grad:.2e}, max |MAP − grid|={worst_map:.4}, antisymmetry violations={asym}"),
    )
}

/// Grid argmax of the 2-item regularized likelihood over `(π_A, π_B) ∈ (0, 10]²`,
/// refined three times by a factor of 10 from a 0.01 grid.
fn btl_grid(ll: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let mut best = (1.0, 1.0);
    let mut best_ll = f64::NEG_INFINITY;
    let mut step: f64 = 1e-2;
    let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (step, 10.0, step, 10.0);
    for _ in 0..3 {
        let na = ((hi_a - lo_a) / step).round() as usize;
        let nb = ((hi_b - lo_b) / step).round() as usize;
        for ia in 0..=na {
            let a = lo_a + ia as f64 * step;
            for ib in 0..=nb {
                let b = lo_b + ib as f64 * step;
                let v = ll(a, b);
                if v > best_ll {
                    best_ll = v;
                    best = (a, b);
                }
            }
        }
        let radius = 5.0 * step;
        step /= 10.0;
        lo_a = (best.0 - radius).max(step);
        hi_a = best.0 + radius;
        lo_b = (best.1 - radius).max(step);
        hi_b = best.1 + radius;
    }
    best
}

/// `k` units in the last place of `x`, the resolution of a summed objective.
fn ulps(x: f64, k: f64) -> f64 {
    k * f64::EPSILON * x.abs()
}

/// `P(i ≻ j)` and `P(j ≻ i)` with `i < j`: the second is exactly `1 − first`,
/// and the two sum to exactly one.
fn antisymmetric(lower_first: f64, upper_first: f64) -> bool {
    upper_first == 1.0 - lower_first && lower_first + upper_first == 1.0
}

fn btl_correctness() -> Outcome {
    let mut worst_grid: f64 = 0.0;
    for (wins_a, wins_b) in [(3.0, 1.0), (0.74, 1.0), (5.0, 0.0)] {
        let mut s = BtlState::new(2);
        let mut left = wins_a;
        while left > 0.0 {
            let w = f64::min(left, 1.0);
            s.record(0, 1, true, w).map_err(err)?;
            left -= w;
        }
        let mut left = wins_b;
        while left > 0.0 {
            let w = f64::min(left, 1.0);
            s.record(1, 0, true, w).map_err(err)?;
            left -= w;
        }
        s.refit();
        let (a, b) = btl_grid(|a, b| {
            let prior = |p: f64| p.ln() - 2.0 * (p + 1.0).ln();
            wins_a * (a / (a + b)).ln() + wins_b * (b / (a + b)).ln() + prior(a) + prior(b)
        });
        worst_grid = worst_grid.max((s.prob(0, 1).map_err(err)? - a / (a + b)).abs());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut drops = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..15);
        let mut s = BtlState::new(n);
        for _ in 0..rng.gen_range(1..80) {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let w = if rng.gen_bool(0.2) { 0.74 } else { 1.0 };
            s.record(i, j, rng.gen_bool(0.6), w).map_err(err)?;
        }
        let trace = s.refit_traced();
        drops += trace.windows(2).filter(|w| w[1] < w[0] - ulps(w[0], 4.0)).count();
    }
    check(
        worst_grid < 1e-3 && drops == 0,
        format!("max |p − grid|={worst_grid:.2e}, objective drops over 50 instances={drops}"),
    )
}

fn elo_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 30;
    let mut s = EloState::new((0..n).map(|_| rng.gen_range(1000.0..2000.0)).collect());
    let start: f64 = s.ratings.iter().sum();
    for _ in 0..10_000 {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let w = if rng.gen_bool(0.3) { 0.74 } else { 1.0 };
        s.update(i, j, rng.gen_bool(0.5), w).map_err(err)?;
    }
    let drift = (s.ratings.iter().sum::<f64>() - start).abs();

    // K in force for the t-th comparison, read off the size of the update.
    let mut k_ok = true;
    let mut e = EloState::new(vec![1500.0; 2]);
    for t in 1..=101u64 {
        e.ratings = vec![1500.0, 1500.0];
        e.update(0, 1, true, 1.0).map_err(err)?;
        let k = (e.ratings[0] - 1500.0) / 0.5;
        let expected = if t <= 100 { K_INITIAL } else { K_SETTLED };
        k_ok &= (k - expected).abs() < 1e-9;
    }
    k_ok &= (K_INITIAL, K_SETTLED) == (128.0, 64.0);

    let mut sigma_ok = true;
    let mut sigmas = Vec::new();
    let mut u = EloState::new(vec![1500.0; 3]);
    for (k, n_i) in [0u64, 3, 99].into_iter().enumerate() {
        u.counts[k] = n_i;
        let got = u.uncertainty(k).map_err(err)?;
        let want = 2.0 * 128.0 / (1.0 + n_i as f64).sqrt();
        sigma_ok &= (got - want).abs() < 1e-12;
        sigmas.push(format!("{got}"));
    }
    check(
        drift < 1e-9 && k_ok && sigma_ok,
        format!("sum drift={drift:.2e}, K steps at 100: {k_ok}, sigma(0,3,99)=[{}]", sigmas.join(", ")),
    )
}

fn random_models(rng: &mut ChaCha8Rng, n: usize, features: &[Vec<f64>]) -> Result<ModelSet, String> {
    let mut elo = EloState::new((0..n).map(|_| rng.gen_range(1200.0..1800.0)).collect());
    for c in &mut elo.counts {
        *c = rng.gen_range(0..60);
    }
    let mut btl = BtlState::new(n);
    let mut comps = Vec::new();
    for _ in 0..rng.gen_range(0..40) {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let first_wins = rng.gen_bool(0.5);
        btl.record(i, j, first_wins, 1.0).map_err(err)?;
        comps.push(IndexedComparison { i, j, first_wins, weight: 1.0 });
    }
    btl.refit();
    let gp = if rng.gen_bool(0.7) {
        let mode = if rng.gen_bool(0.5) { GpMode::Practical } else { GpMode::Full };
        Some(GpState::fit(features, &(0..n).collect::<Vec<_>>(), &comps, GpConfig { mode, ..GpConfig::default() }).map_err(err)?)
    } else {
        None
    };
    let head = HeadModel::new(features[0].len(), 8, rng.gen());
    Ok(ModelSet { elo, btl, gp, head })
}

fn ensemble_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 8;
    let (mut asym, mut verdicts, mut max_c) = (0usize, 0usize, 0.0f64);
    let states = 1000;
    for _ in 0..states {
        let features: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let models = random_models(&mut rng, n, &features)?;
        let weights = if models.gp.is_some() { ModelWeights::WITH_GP } else { ModelWeights::WITHOUT_GP };
        let cfg = AutomationConfig {
            gamma: rng.gen_range(0.5..3.0),
            ..AutomationConfig::default()
        };
        let theta = rng.gen_range(0.0..1.0);
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        let a = models.decide(&features, i, j, &weights, &cfg, theta).map_err(err)?;
        let b = models.decide(&features, j, i, &weights, &cfg, theta).map_err(err)?;
        asym += usize::from(!antisymmetric(a.p_ens, b.p_ens));
        verdicts += usize::from(a.verdict != b.verdict);
        max_c = max_c.max(a.c_ens).max(b.c_ens);

        // Arbitrary votes, including fully confident ones.
        let kinds = [ModelKind::Text, ModelKind::Elo, ModelKind::Btl, ModelKind::Gp];
        let votes: Vec<ModelVote> = kinds
            .iter()
            .take(rng.gen_range(1..=4))
            .map(|&model| ModelVote {
                model,
                p: if rng.gen_bool(0.2) { 1.0 } else { rng.gen_range(0.0..1.0) },
                c: if rng.gen_bool(0.2) { 1.0 } else { rng.gen_range(0.0..1.0) },
            })
            .collect();
        max_c = max_c.max(combine(&votes, &ModelWeights::WITH_GP).map_err(err)?.c_ens);
    }
    let theta = SessionConfig::default().automation.theta_base(200);
    check(
        asym == 0 && verdicts == 0 && max_c <= MAX_ENSEMBLE_CONFIDENCE && theta == 0.75,
        format!(
            "{states} states: p_ens asymmetries={asym}, verdict flips={verdicts}, max c_ens={max_c}, theta_base(200)={theta}"
        ),
    )
}

fn judge_all(session: &mut Session, world: &mut SyntheticWorld, stop: impl Fn(&Session) -> bool) -> Result<Option<Vec<String>>, String> {
    loop {
        if stop(session) {
            return Ok(None);
        }
        match session.step().map_err(err)? {
            StepOutcome::NeedHuman { i, j, .. } => {
                let (a, b) = (session.lookup(&i).map_err(err)?, session.lookup(&j).map_err(err)?);
                let i_wins = world.judge(a, b);
                session.submit_judgment(&i, &j, i_wins).map_err(err)?;
            }
            StepOutcome::AutoResolving { .. } => {}
            StepOutcome::Complete { ranking } => return Ok(Some(ranking)),
        }
    }
}

fn determinism() -> Outcome {
    let mut notes = Vec::new();
    for policy in [Policy::Guided, Policy::PlainMergesort, Policy::RandomPairs] {
        let cfg = experiment(60, 0.1, 7, policy);
        let a = serde_json::to_vec(&run_experiment(&cfg).map_err(err)?.report).map_err(err)?;
        let b = serde_json::to_vec(&run_experiment(&cfg).map_err(err)?.report).map_err(err)?;
        if a != b {
            return Err(format!("{policy}: reports differ"));
        }
    }
    notes.push("reports byte-identical for 3 policies".to_string());

    let mut replayed = 0;
    for seed in 0..4 {
        for policy in [Policy::Guided, Policy::PlainMergesort] {
            let run = run_experiment(&experiment(50, 0.1 * seed as f64, seed, policy)).map_err(err)?;
            let mut s = Session::replay(&run.events).map_err(err)?;
            if s.current_ranking().order != run.report.ranking {
                return Err(format!("{policy} seed {seed}: replayed ranking differs"));
            }
            replayed += 1;
        }
    }
    notes.push(format!("{replayed} simulated logs replay to their rankings"));

    // Kill a session while a slow retrain is in flight, resume from its log.
    let mut w = SyntheticWorld::new(WorldConfig { n: 60, seed: 9, ..WorldConfig::default() }).map_err(err)?;
    let slow = SessionOptions {
        retrain: RetrainMode::Background { delay: Duration::from_millis(500) },
        clock: Clock::Logical,
    };
    let mut s = Session::new("killed", w.items.clone(), SessionConfig::default(), slow).map_err(err)?;
    judge_all(&mut s, &mut w, |s| s.human_count() + s.auto_count() >= 55 && s.retrain_in_flight())?;
    if !s.retrain_in_flight() {
        return Err("no retrain in flight at the kill point".into());
    }
    let log = s.events().to_vec();
    let before = s.current_ranking().order;
    drop(s);

    let mut prefix = Session::replay(&log).map_err(err)?;
    if prefix.current_ranking().order != before {
        return Err("replay of the killed log differs from the live ranking".into());
    }
    let inline = SessionOptions {
        retrain: RetrainMode::Inline,
        clock: Clock::Logical,
    };
    let mut resumed = Session::resume(&log, inline).map_err(err)?;
    let ranking = judge_all(&mut resumed, &mut w, |_| false)?.ok_or("resumed session did not finish")?;
    let mut full = Session::replay(resumed.events()).map_err(err)?;
    if full.final_ranking().map_err(err)?.order != ranking {
        return Err("replay of the resumed log differs from its final ranking".into());
    }
    notes.push(format!("killed mid-retrain after {} events, resumed and replayed", log.len()));
    Ok(notes.join("; "))
}

fn no_idle() -> Outcome {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, background(Duration::from_secs(2)));
    let w = world(100, 4);
    let truth = common::truth_scores(&w);
    let (code, body) = server.post("/v1/sessions", &create_body("idle", &w));
    if code != 201 {
        return Err(format!("create failed: {code} {body}"));
    }
    let (_, stats) = server.get("/v1/sessions/idle/stats");
    let head_start = stats["head_version"].as_u64().unwrap_or(0);

    let (mut timed, mut head_pending, mut worst) = (0usize, 0usize, Duration::ZERO);
    for _ in 0..140 {
        let (_, stats) = server.get("/v1/sessions/idle/stats");
        let in_flight = stats["retrain_in_flight"] == true;
        let records = stats["human"].as_u64().unwrap_or(0) + stats["auto"].as_u64().unwrap_or(0);
        let start = Instant::now();
        let (code, next) = server.get("/v1/sessions/idle/next");
        let latency = start.elapsed();
        if in_flight {
            timed += 1;
            worst = worst.max(latency);
            if records >= 50 && stats["head_version"].as_u64() == Some(head_start) {
                head_pending += 1;
            }
        }
        match (code, next["status"].as_str()) {
            (200, Some("pair")) => {
                let (i, j) = (next["pair"]["i"].as_str().unwrap(), next["pair"]["j"].as_str().unwrap());
                let winner = if truth[i] > truth[j] { i } else { j };
                let (code, _) = server.post("/v1/sessions/idle/judgments", &json!({ "i": i, "j": j, "winner": winner }));
                if code != 200 {
                    return Err(format!("judgment rejected with {code}"));
                }
            }
            (202, _) => {}
            (200, Some("complete")) => break,
            _ => return Err(format!("unexpected /next response {code} {next}")),
        }
    }
    check(
        timed > 0 && head_pending > 0 && worst < Duration::from_millis(100),
        format!(
            "max GET /next latency {:.1} ms over {timed} requests with a retrain in flight ({head_pending} during a head retrain)",
            worst.as_secs_f64() * 1e3
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact sort without automation", exact_sort),
        ("automation envelope at n=100", automation_envelope),
        ("EffGain arithmetic", effgain_table),
        ("selection beats random pairs", selection_beats_random),
        ("GP correctness", gp_correctness),
        ("BTL correctness", btl_correctness),
        ("Elo invariants", elo_invariants),
        ("ensemble and automation invariants", ensemble_invariants),
        ("determinism and crash replay", determinism),
        ("no-idle GET /next", no_idle),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
