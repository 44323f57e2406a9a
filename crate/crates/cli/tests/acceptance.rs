//! Acceptance criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The exit status is nonzero when any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use oculorl_core::checkpoint;
use oculorl_core::ddpg::{TrainConfig, Trainer};
use oculorl_core::env::{ActionVector, EpisodeConfig, OcularEnv, ResetOptions, ACTION_DIM, OBS_DIM};
use oculorl_core::evalkit::report::{stats_csv, REFERENCE_ANGLE_DEG};
use oculorl_core::evalkit::{
    aggregate_stats, deviation_angle, emit_report, milestone_checkpoints, run_phase1, run_phase2, Greedy, GridSpec,
    ReportInputs, UniformRandom, STATS_HEADER,
};
use oculorl_core::muscle::activation_step;
use oculorl_core::netcore::Actor;
use oculorl_core::plant::Plant;
use oculorl_core::seeding::{stream, Domain};
use oculorl_core::selfcheck;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRAIN_SEED: u64 = 1;
const TRAIN_EPISODES: usize = 2000;
const PAPER_MILESTONES: usize = 26;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn report(n: usize, title: &str, elapsed: Duration, o: &Outcome) {
    println!(
        "criterion {n:>2} {}  {title} ({:.1} s): {}",
        if o.passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
}

fn c1_dimensions() -> Outcome {
    let start = Instant::now();
    let mut env = OcularEnv::new(Plant::default(), EpisodeConfig::default(), 4);
    let obs = env.reset(ResetOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let actor = Actor::new(&[64, 64, 64], &mut rng);
    let mut actions_ok = true;
    let mut obs_ok = obs.0.len() == 27;
    let mut cur = obs;
    for _ in 0..100 {
        let a = actor.act(&cur).expect("forward");
        actions_ok &= a.0.len() == 12 && a.0.iter().all(|v| (0.0..=1.0).contains(v));
        let out = env.step(&a).expect("step");
        obs_ok &= out.observation.0.len() == 27;
        cur = out.observation;
        if out.done {
            break;
        }
    }
    // out-of-range inputs are clamped into the unit box
    let clamped = ActionVector::new([-3.0, 4.0, 0.5, f64::NAN, 1.0, 0.0, 2.0, -1.0, 0.2, 0.3, 0.4, 0.5]);
    actions_ok &= clamped.0.iter().all(|v| (0.0..=1.0).contains(v));
    let dt = env.config().dt;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        obs_ok && actions_ok && OBS_DIM == 27 && ACTION_DIM == 12 && dt == 0.01 && secs < 1.0,
        format!("observation 27: {obs_ok}, action 12 in [0,1]: {actions_ok}, dt {dt} s, {secs:.3} s"),
    )
}

fn c2_reward() -> Outcome {
    let cases = selfcheck::reward_cases(&Plant::default());
    // hand values, written out independently of the library
    let half = 0.031f64;
    let expected = [0.0, -0.32, -67.36, -16.0 * 2.0 * half * half - 32.0 * 2.0 * half];
    let mut worst = 0.0f64;
    for ((got, _), want) in cases.iter().zip(expected) {
        worst = worst.max((got - want).abs());
    }
    let reset = cases[3].0;
    outcome(
        cases.len() == 4 && worst < 1e-9 && (reset + 2.015).abs() < 5e-4,
        format!("max error {worst:.2e} over 0, -0.32, -67.36, reset case {reset:.6} (~ -2.015)"),
    )
}

fn c3_action_signs() -> Outcome {
    let start = Instant::now();
    let signs = selfcheck::action_signs(&Plant::default());
    let ok = signs.iter().filter(|s| s.passed).count();
    let failing: Vec<String> = signs.iter().filter(|s| !s.passed).map(|s| s.muscle.clone()).collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok == 12 && signs.len() == 12 && secs < 10.0,
        format!("{ok}/12 primary actions correct in {secs:.2} s{}", if failing.is_empty() { String::new() } else { format!(", failing {failing:?}") }),
    )
}

fn c4_activation() -> Outcome {
    let plant = Plant::default();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = &plant.muscles[rng.random_range(0..12)];
        let a: f64 = rng.random_range(0.0..=1.0);
        let u: f64 = rng.random_range(0.0..=1.0);
        let dt: f64 = rng.random_range(1e-5..0.5);
        let tau = if u > a { m.tau_act } else { m.tau_deact };
        let exact = a * (-dt / tau).exp() + u * (1.0 - (-dt / tau).exp());
        worst = worst.max((activation_step(a, u, dt, m) - exact).abs());
    }
    outcome(worst < 1e-9, format!("1000 cases, max error {worst:.2e}"))
}

fn c5_stability() -> Outcome {
    let r = selfcheck::plant_stability(&Plant::default(), 100_000, 55);
    outcome(
        r.settle_deg < 1.0 && r.random_failures == 0 && r.energy_monotone && r.substep_drift_deg < 0.1,
        format!(
            "settled to {:.2e} deg in 1 s, {} non-finite in {} random steps, energy non-increasing {}, substep-halving drift {:.4} deg",
            r.settle_deg, r.random_failures, r.random_steps, r.energy_monotone, r.substep_drift_deg
        ),
    )
}

fn c6_gradients() -> Outcome {
    let g = selfcheck::gradient_errors(5, usize::MAX, 66);
    let worst = g.actor.max(g.critic_params).max(g.critic_action);
    outcome(
        worst < 1e-4,
        format!(
            "5 draws, every parameter: actor {:.2e}, critic params {:.2e}, critic action {:.2e}",
            g.actor, g.critic_params, g.critic_action
        ),
    )
}

fn c7_ddpg() -> Outcome {
    let d = selfcheck::ddpg_sanity(77);
    outcome(
        d.bowl_error < 1e-2 && d.regression_loss < 1e-6,
        format!(
            "bowl optimum error {:.2e} after {} updates, critic loss {:.2e} after {} updates",
            d.bowl_error, d.bowl_updates, d.regression_loss, d.regression_updates
        ),
    )
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c8_learning(dir: &Path) -> (Outcome, Option<Actor>) {
    let start = Instant::now();
    let cfg = TrainConfig {
        episodes: TRAIN_EPISODES,
        seed: TRAIN_SEED,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(cfg, Plant::default(), EpisodeConfig::default());
    let summary = match trainer.run(Some(dir)) {
        Ok(s) => s,
        Err(e) => return (outcome(false, format!("training failed: {e}")), None),
    };
    let train_secs = start.elapsed().as_secs_f64();
    let rewards: Vec<f64> = summary.log.iter().map(|r| r.cumulative_reward).collect();
    let first = mean(&rewards[..100]);
    let last = mean(&rewards[rewards.len() - 100..]);
    let means: Vec<f64> = summary.milestones.iter().map(|m| m.rolling_mean).collect();
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    let a = means.len() >= 3 && increasing;
    let required = (0.5 * first.abs()).min(100.0);
    let b = last - first >= required;

    let actor = checkpoint::load_actor(&dir.join("final.ckpt")).expect("final checkpoint");
    let grid = GridSpec::default();
    let plant = Plant::default();
    let ep = EpisodeConfig::default();
    let trained = run_phase2(|_| Greedy(&actor), &grid, &plant, &ep, 88, 4).expect("phase 2");
    let trained = aggregate_stats(&trained, grid.warmup_drop).expect("stats");
    let random = run_phase2(
        |k| UniformRandom(stream(88, Domain::Baseline, k as u64)),
        &grid,
        &plant,
        &ep,
        88,
        4,
    )
    .expect("baseline");
    let random = aggregate_stats(&random, grid.warmup_drop).expect("stats");
    let pooled = |s: &oculorl_core::evalkit::FixationStats| (s.overall.right.mean + s.overall.left.mean) / 2.0;
    let d_trained = pooled(&trained);
    let d_random = pooled(&random);
    let c = d_trained < 0.25;
    let total_secs = start.elapsed().as_secs_f64();
    let fast = total_secs < 30.0 * 60.0;

    println!(
        "             training: {} episodes in {train_secs:.0} s, {} milestones (reference {PAPER_MILESTONES})",
        rewards.len(),
        means.len()
    );
    println!("             first-100 mean {first:.2}, last-100 mean {last:.2}, required gain {required:.2}");
    println!(
        "             phase 2 mean POG distance: trained {:.4} m ({:.2} deg), random baseline {:.4} m ({:.2} deg); reference {} +- {} deg",
        d_trained,
        deviation_angle(d_trained, 1.0),
        d_random,
        deviation_angle(d_random, 1.0),
        REFERENCE_ANGLE_DEG.0,
        REFERENCE_ANGLE_DEG.1
    );
    let o = outcome(
        a && b && c && fast,
        format!(
            "(a) {} increasing milestones: {a}; (b) gain {:.2} >= {required:.2}: {b}; (c) {d_trained:.4} m < 0.25 m (random {d_random:.4} m): {c}; runtime {total_secs:.0} s < 1800 s: {fast}",
            means.len(),
            last - first
        ),
    );
    (o, Some(actor))
}

fn c9_protocol(train_dir: &Path, actor: Option<&Actor>, scratch: &Path) -> Outcome {
    let plant = Plant::default();
    let ep = EpisodeConfig::default();
    let mut notes = Vec::new();
    let mut passed = true;

    let ckpts = milestone_checkpoints(train_dir).unwrap_or_default();
    if ckpts.is_empty() {
        return outcome(false, "no milestone checkpoints to evaluate");
    }
    let curves = run_phase1(&ckpts, &plant, &ep, 10, 9).expect("phase 1");
    let shape_ok = curves.len() == ckpts.len() && curves.iter().all(|c| c.rewards.len() == 10 && c.rewards.iter().all(|r| r.len() == 100));
    passed &= shape_ok;
    notes.push(format!("phase 1: {} checkpoints x 10 x 100 steps: {shape_ok}", curves.len()));

    let fallback;
    let actor = match actor {
        Some(a) => a,
        None => {
            fallback = Actor::new(&[64, 64, 64], &mut ChaCha8Rng::seed_from_u64(9));
            &fallback
        }
    };
    let grid = GridSpec::default();
    let grid_ok = grid.points.len() == 9 && grid.episodes_per_point == 50 && grid.steps == 100 && grid.warmup_drop == 20;
    let run = |workers| {
        let traces = run_phase2(|_| Greedy(actor), &grid, &plant, &ep, 99, workers).expect("phase 2");
        let stats = aggregate_stats(&traces, grid.warmup_drop).expect("stats");
        (traces, stats)
    };
    let (traces, stats) = run(1);
    let full = traces.len() == 9
        && traces.iter().all(|p| p.episodes.len() == 50 && p.episodes.iter().all(|e| e.len() == 100 || e.failed));
    let complete = traces.iter().flat_map(|p| &p.episodes).filter(|e| !e.failed).count();
    let samples_ok = stats.failed_episodes > 0 || stats.overall.samples == 9 * 50 * 80;
    let spacing_ok = traces
        .iter()
        .zip(GridSpec::square(0.1))
        .all(|(p, (dy, dz))| p.dy == dy && p.dz == dz);
    passed &= grid_ok && full && samples_ok && spacing_ok;
    notes.push(format!(
        "phase 2: 9 x 50 x 100 with {} complete episodes, {} pooled samples per eye after dropping 20: {}",
        complete,
        stats.overall.samples,
        grid_ok && full && samples_ok && spacing_ok
    ));

    let csv_a = stats_csv(&stats);
    let (_, stats_b) = run(3);
    let csv_b = stats_csv(&stats_b);
    let header_ok = csv_a.lines().next() == Some(STATS_HEADER) && csv_a.lines().count() == 10;
    let inputs = ReportInputs {
        stats: Some(&stats),
        points: &traces,
        milestones: &curves,
        depth: 1.0,
    };
    let d1 = scratch.join("report_a");
    let d2 = scratch.join("report_b");
    emit_report(&d1, &inputs).expect("report");
    emit_report(&d2, &inputs).expect("report");
    let files_equal = ["stats.csv", "overall.csv", "milestones.csv", "point_0_0/distances.csv"]
        .iter()
        .all(|f| fs::read(d1.join(f)).ok().is_some() && fs::read(d1.join(f)).ok() == fs::read(d2.join(f)).ok());
    let stable = csv_a == csv_b && files_equal;
    passed &= header_ok && stable;
    notes.push(format!("Table 2 columns: {header_ok}, byte-stable: {stable}"));
    outcome(passed, notes.join("; "))
}

fn binary() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oculorl"));
    c.env_remove("OCULORL_OUT");
    c
}

fn train_cli(out: &Path, cfg: &Path, extra: &[&str]) -> bool {
    binary()
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .arg("train")
        .args(extra)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn c10_determinism(scratch: &Path) -> Outcome {
    let cfg = scratch.join("c10.toml");
    fs::write(&cfg, "[train]\nepisodes = 30\ncheckpoint_every = 0\n").expect("write config");
    let a = scratch.join("det_a");
    let b = scratch.join("det_b");
    let ran = train_cli(&a, &cfg, &["--seed", "17"]) && train_cli(&b, &cfg, &["--seed", "17"]);
    let log = |d: &Path| fs::read(d.join("train_log.csv")).unwrap_or_default();
    let same = ran && !log(&a).is_empty() && log(&a) == log(&b);

    let part = scratch.join("det_part");
    let resumed = train_cli(&part, &cfg, &["--seed", "17", "--episodes", "12"])
        && train_cli(&part, &cfg, &["--checkpoint", part.join("final.ckpt").to_str().expect("utf-8 path")]);
    let resume_same = resumed && log(&part) == log(&a);
    let final_same = fs::read(part.join("final.ckpt")).ok().zip(fs::read(a.join("final.ckpt")).ok()).is_some_and(|(x, y)| {
        let (x, y) = (checkpoint::decode(&x), checkpoint::decode(&y));
        matches!((x, y), (Ok(x), Ok(y)) if x.agent == y.agent && x.history == y.history)
    });
    outcome(
        same && resume_same && final_same,
        format!("two seeded runs identical: {same}; 12 + 18 resumed episodes match 30 uninterrupted (log {resume_same}, networks {final_same})"),
    )
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temp dir");
    let train_dir = scratch.path().join("train");
    let mut results = Vec::new();
    let mut record = |n: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        report(n, title, start.elapsed(), &o);
        results.push(o.passed);
    };
    record(1, "dimensional contract", &mut c1_dimensions);
    record(2, "reward oracle", &mut c2_reward);
    record(3, "action-sign suite", &mut c3_action_signs);
    record(4, "activation dynamics", &mut c4_activation);
    record(5, "plant stability", &mut c5_stability);
    record(6, "gradient checks", &mut c6_gradients);
    record(7, "DDPG unit sanity", &mut c7_ddpg);
    let mut actor = None;
    record(8, "scaled end-to-end learning", &mut || {
        let (o, a) = c8_learning(&train_dir);
        actor = a;
        o
    });
    record(9, "protocol fidelity", &mut || c9_protocol(&train_dir, actor.as_ref(), scratch.path()));
    record(10, "determinism", &mut || c10_determinism(scratch.path()));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
