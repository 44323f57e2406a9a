use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use oculorl_core::checkpoint::{self, FORMAT_VERSION};
use oculorl_core::config::{load_config, Manifest, RunConfig, RunInfo};
use oculorl_core::ddpg::train::{read_log, FINAL_CHECKPOINT, LOG_FILE, LOG_HEADER};
use oculorl_core::ddpg::Trainer;
use oculorl_core::env::{write_trace_csv, OcularEnv, ResetOptions};
use oculorl_core::evalkit::report::{fmt_coord, summary_text};
use oculorl_core::evalkit::{
    aggregate_stats, emit_report, milestone_checkpoints, regenerate_plots, run_phase1, run_phase2, run_traced, Greedy,
    ReportInputs, UniformRandom,
};
use oculorl_core::seeding::{stream, Domain};
use oculorl_core::selfcheck;

use crate::args::{Cli, Command, Common};

const DEFAULT_OUT: &str = "oculorl-out";
const REPORT_DIR: &str = "report";

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    verbose: bool,
    workers: Option<usize>,
    seed_flag: Option<u64>,
}

pub fn dispatch(cli: Cli, args: &[String]) -> Result<ExitCode> {
    let ctx = context(&cli.common)?;
    let name = command_name(&cli.command);
    fs::create_dir_all(&ctx.out).with_context(|| format!("cannot create output directory {:?}", ctx.out))?;
    let manifest = Manifest::new(
        RunInfo {
            command: name.to_string(),
            args: args.to_vec(),
            seed: ctx.cfg.seed,
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            core_version: oculorl_core::VERSION.to_string(),
            checkpoint_format: FORMAT_VERSION,
        },
        &ctx.cfg,
    );
    let path = manifest.write(&ctx.out)?;
    if ctx.verbose {
        eprintln!("manifest: {}", path.display());
    }
    match cli.command {
        Command::Train { episodes, checkpoint } => train(&ctx, episodes, checkpoint.as_deref()),
        Command::EvalMilestones { checkpoint, episodes } => eval_milestones(&ctx, checkpoint.as_deref(), episodes),
        Command::EvalGrid { checkpoint, random } => eval_grid(&ctx, checkpoint.as_deref(), random),
        Command::Rollout { checkpoint, dy, dz } => rollout(&ctx, checkpoint.as_deref(), dy.zip(dz)),
        Command::Verify => verify(&ctx),
        Command::Report => report(&ctx),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Train { .. } => "train",
        Command::EvalMilestones { .. } => "eval-milestones",
        Command::EvalGrid { .. } => "eval-grid",
        Command::Rollout { .. } => "rollout",
        Command::Verify => "verify",
        Command::Report => "report",
    }
}

fn context(common: &Common) -> Result<Ctx> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(w) = common.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        cfg.train.workers = w;
        cfg.eval.workers = w;
    }
    cfg.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Ctx {
        cfg,
        out,
        verbose: common.verbose,
        workers: common.workers,
        seed_flag: common.seed,
    })
}

fn train(ctx: &Ctx, episodes: Option<usize>, resume: Option<&Path>) -> Result<ExitCode> {
    let mut tc = ctx.cfg.train_config();
    if let Some(n) = episodes {
        tc.episodes = n;
    }
    let plant = ctx.cfg.plant_model();
    let episode_cfg = ctx.cfg.episode_config();
    let log_path = ctx.out.join(LOG_FILE);
    let mut trainer = match resume {
        Some(path) => {
            let ckpt = checkpoint::load(path).with_context(|| format!("cannot load checkpoint {path:?}"))?;
            if let Some(s) = ctx.seed_flag {
                if s != ckpt.seed {
                    bail!("--seed {s} differs from the checkpoint seed {}", ckpt.seed);
                }
            }
            tc.seed = ckpt.seed;
            trim_log(&log_path, ckpt.episodes_done as usize)?;
            Trainer::from_checkpoint(tc, plant, episode_cfg, ckpt)?
        }
        None => {
            if log_path.exists() {
                bail!(
                    "{:?} already holds a training run; pass --checkpoint to resume or choose another --out",
                    ctx.out
                );
            }
            Trainer::new(tc, plant, episode_cfg)
        }
    };
    let start = trainer.episodes_done();
    let verbose = ctx.verbose;
    let summary = trainer.run_with(Some(&ctx.out), |row| {
        if verbose {
            eprintln!(
                "episode {:>6}  reward {:>10.3}  mean {:>10.3}  sigma {:.4}{}",
                row.episode,
                row.cumulative_reward,
                row.rolling_mean,
                row.noise_sigma,
                if row.milestone { "  milestone" } else { "" }
            );
        }
    })?;
    println!("episodes: {} (this run {})", trainer.episodes_done(), trainer.episodes_done() - start);
    println!("milestones this run: {}", summary.milestones.len());
    for m in &summary.milestones {
        println!("  m{} at episode {}: rolling mean {:.3}", m.index, m.episode, m.rolling_mean);
    }
    if let Some(last) = summary.log.last() {
        println!("final rolling mean: {:.3}", last.rolling_mean);
    }
    if let Some(p) = summary.final_checkpoint {
        println!("final checkpoint: {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Drops log rows past `episodes` so a resumed run appends cleanly.
fn trim_log(path: &Path, episodes: usize) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let rows = read_log(path)?;
    if rows.len() < episodes {
        bail!(
            "{path:?} has {} rows but the checkpoint completed {episodes} episodes",
            rows.len()
        );
    }
    if rows.len() > episodes {
        let mut text = format!("{LOG_HEADER}\n");
        for r in &rows[..episodes] {
            text.push_str(&r.to_csv_line());
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("cannot rewrite {path:?}"))?;
    }
    Ok(())
}

fn eval_milestones(ctx: &Ctx, source: Option<&Path>, episodes: Option<usize>) -> Result<ExitCode> {
    let source = source.unwrap_or(&ctx.out);
    let paths = if source.is_dir() {
        milestone_checkpoints(source)?
    } else {
        vec![source.to_path_buf()]
    };
    if paths.is_empty() {
        bail!("no milestone checkpoints (m<index>_<episode>.ckpt) in {source:?}");
    }
    let episodes = episodes.unwrap_or(ctx.cfg.eval.milestone_episodes);
    if episodes == 0 {
        bail!("--episodes must be at least 1");
    }
    let curves = run_phase1(&paths, &ctx.cfg.plant_model(), &ctx.cfg.episode_config(), episodes, ctx.cfg.seed)?;
    let dir = ctx.out.join(REPORT_DIR);
    let inputs = ReportInputs {
        milestones: &curves,
        depth: ctx.cfg.episode.target_depth,
        ..Default::default()
    };
    let written = emit_report(&dir, &inputs)?;
    println!("checkpoint,train_episode,mean_cumulative_reward");
    for c in &curves {
        let cum = c.cumulative();
        let mean = cum.iter().sum::<f64>() / cum.len() as f64;
        println!("{},{},{:.3}", c.checkpoint.display(), c.train_episode, mean);
    }
    if ctx.verbose {
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn eval_grid(ctx: &Ctx, ckpt: Option<&Path>, random: bool) -> Result<ExitCode> {
    let grid = ctx.cfg.grid_spec();
    grid.validate().map_err(anyhow::Error::msg)?;
    let plant = ctx.cfg.plant_model();
    let episode_cfg = ctx.cfg.episode_config();
    let workers = ctx.workers.unwrap_or(ctx.cfg.eval.workers);
    let seed = ctx.cfg.seed;
    let (traces, dir) = if random {
        let t = run_phase2(
            |k| UniformRandom(stream(seed, Domain::Baseline, k as u64)),
            &grid,
            &plant,
            &episode_cfg,
            seed,
            workers,
        )?;
        (t, ctx.out.join("report_random"))
    } else {
        let path = ckpt.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join(FINAL_CHECKPOINT));
        let actor = checkpoint::load_actor(&path).with_context(|| format!("cannot load checkpoint {path:?}"))?;
        let t = run_phase2(|_| Greedy(&actor), &grid, &plant, &episode_cfg, seed, workers)?;
        (t, ctx.out.join(REPORT_DIR))
    };
    let stats = aggregate_stats(&traces, grid.warmup_drop)?;
    let inputs = ReportInputs {
        stats: Some(&stats),
        points: &traces,
        milestones: &[],
        depth: ctx.cfg.episode.target_depth,
    };
    let written = emit_report(&dir, &inputs)?;
    print!("{}", fs::read_to_string(dir.join("stats.csv")).unwrap_or_default());
    print!("{}", summary_text(&stats, ctx.cfg.episode.target_depth));
    if ctx.verbose {
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn rollout(ctx: &Ctx, ckpt: Option<&Path>, displacement: Option<(f64, f64)>) -> Result<ExitCode> {
    let path = ckpt.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join(FINAL_CHECKPOINT));
    let actor = checkpoint::load_actor(&path).with_context(|| format!("cannot load checkpoint {path:?}"))?;
    let mut env = OcularEnv::new(ctx.cfg.plant_model(), ctx.cfg.episode_config(), 0);
    let mut rng = stream(ctx.cfg.seed, Domain::Rollout, 0);
    let opts = match displacement {
        Some((dy, dz)) => ResetOptions::displaced(dy, dz),
        None => ResetOptions::default(),
    };
    let first = env.reset_with(&mut rng, opts);
    let target = first.target();
    let rows = run_traced(&mut env, first, &mut Greedy(&actor))?;
    let file = match displacement {
        Some((dy, dz)) => format!("rollout_{}_{}.csv", fmt_coord(dy), fmt_coord(dz)),
        None => "rollout.csv".to_string(),
    };
    let out_path = ctx.out.join(file);
    let f = fs::File::create(&out_path).with_context(|| format!("cannot create {out_path:?}"))?;
    write_trace_csv(&rows, std::io::BufWriter::new(f)).with_context(|| format!("cannot write {out_path:?}"))?;
    let total: f64 = rows.iter().map(|r| r.reward).sum();
    println!("target: ({:.4}, {:.4}, {:.4})", target.x, target.y, target.z);
    println!("steps: {}, cumulative reward: {total:.3}", rows.len());
    if let Some(last) = rows.last() {
        println!(
            "final distance (cm): right {:.2}, left {:.2}",
            last.terms.dist_ro * 100.0,
            last.terms.dist_lo * 100.0
        );
    }
    println!("trace: {}", out_path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(ctx: &Ctx) -> Result<ExitCode> {
    let plant = ctx.cfg.plant_model();
    let results = selfcheck::run_all(&plant, ctx.cfg.seed);
    let mut text = String::new();
    for r in &results {
        text.push_str(&format!("{} {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    if ctx.verbose {
        for s in selfcheck::action_signs(&plant) {
            text.push_str(&format!(
                "  {:<5} {:<30} abduction {:>7.2} elevation {:>7.2} excyclo {:>7.2} deg {}\n",
                s.muscle,
                s.expected,
                s.abduction_deg,
                s.elevation_deg,
                s.excyclo_deg,
                if s.passed { "ok" } else { "WRONG" }
            ));
        }
    }
    print!("{text}");
    let path = ctx.out.join("verify.txt");
    fs::write(&path, &text).with_context(|| format!("cannot write {path:?}"))?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        eprintln!("{failed} check(s) failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn report(ctx: &Ctx) -> Result<ExitCode> {
    let mut dirs: Vec<PathBuf> = ["report", "report_random"]
        .iter()
        .map(|d| ctx.out.join(d))
        .filter(|d| d.is_dir())
        .collect();
    if dirs.is_empty() {
        dirs.push(ctx.out.clone());
    }
    let mut n = 0;
    for d in &dirs {
        let written = regenerate_plots(d)?;
        n += written.len();
        if ctx.verbose {
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    if n == 0 {
        bail!("no CSV tables found under {:?}", ctx.out);
    }
    println!("regenerated {n} plot(s)");
    Ok(ExitCode::SUCCESS)
}
