use std::path::{Path, PathBuf};

use rand::Rng;

use crate::checkpoint;
use crate::env::{ActionVector, EpisodeConfig, Observation, OcularEnv, ResetOptions, TraceRow, ACTION_DIM};
use crate::error::EvalError;
use crate::netcore::Actor;
use crate::plant::Plant;
use crate::seeding::{stream, Domain};

/// Anything that maps observations to excitations during evaluation.
pub trait Policy {
    fn action(&mut self, obs: &Observation) -> Result<ActionVector, EvalError>;
}

/// Noise-free policy network.
pub struct Greedy<'a>(pub &'a Actor);

impl Policy for Greedy<'_> {
    fn action(&mut self, obs: &Observation) -> Result<ActionVector, EvalError> {
        Ok(self.0.act(obs)?)
    }
}

/// Independent uniform excitations every step.
pub struct UniformRandom<R: Rng>(pub R);

impl<R: Rng> Policy for UniformRandom<R> {
    fn action(&mut self, _obs: &Observation) -> Result<ActionVector, EvalError> {
        Ok(ActionVector::new(std::array::from_fn(|_| self.0.random::<f64>())))
    }
}

/// Fixed displacement grid around the base target.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub points: Vec<(f64, f64)>,
    pub episodes_per_point: usize,
    pub steps: usize,
    pub warmup_drop: usize,
    /// Half-width of the per-episode initial gaze perturbation (rad).
    pub jitter_rad: f64,
}

impl GridSpec {
    /// `(dy, dz)` over `{0, s, -s}^2`, dy-major.
    pub fn square(spacing: f64) -> Vec<(f64, f64)> {
        let axis = [0.0, spacing, -spacing];
        axis.iter().flat_map(|&dy| axis.iter().map(move |&dz| (dy, dz))).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.points.len() != 9 {
            return Err(format!("grid needs 9 points, got {}", self.points.len()));
        }
        if self.warmup_drop >= self.steps {
            return Err(format!("warmup_drop {} must be below steps {}", self.warmup_drop, self.steps));
        }
        if self.episodes_per_point == 0 {
            return Err("episodes_per_point must be positive".into());
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: Self::square(0.1),
            episodes_per_point: 50,
            steps: 100,
            warmup_drop: 20,
            jitter_rad: 0.5f64.to_radians(),
        }
    }
}

/// Per-step measurements of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    /// Right POG to target distance (m).
    pub dist_r: Vec<f64>,
    pub dist_l: Vec<f64>,
    pub activations: Vec<[f64; ACTION_DIM]>,
    pub rewards: Vec<f64>,
    /// Ended early through a plant or geometry failure.
    pub failed: bool,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointTrace {
    pub dy: f64,
    pub dz: f64,
    pub episodes: Vec<EpisodeTrace>,
}

/// Runs one episode from an already reset environment.
pub fn run_episode<P: Policy + ?Sized>(env: &mut OcularEnv, first: Observation, policy: &mut P) -> Result<EpisodeTrace, EvalError> {
    let steps = env.config().steps;
    let mut trace = EpisodeTrace {
        dist_r: Vec::with_capacity(steps),
        dist_l: Vec::with_capacity(steps),
        activations: Vec::with_capacity(steps),
        rewards: Vec::with_capacity(steps),
        failed: false,
    };
    let mut obs = first;
    while !env.is_done() {
        let a = policy.action(&obs)?;
        let out = env.step(&a)?;
        obs = out.observation;
        // measured from the observation so failure steps still report a distance
        trace.dist_r.push(obs.pog_right().distance(obs.target()));
        trace.dist_l.push(obs.pog_left().distance(obs.target()));
        let mut act = [0.0; ACTION_DIM];
        act.copy_from_slice(obs.activations());
        trace.activations.push(act);
        trace.rewards.push(out.reward);
        trace.failed |= out.failure.is_some();
    }
    Ok(trace)
}

/// Runs one episode and records every step for export.
pub fn run_traced<P: Policy + ?Sized>(env: &mut OcularEnv, first: Observation, policy: &mut P) -> Result<Vec<TraceRow>, EvalError> {
    let mut rows = Vec::with_capacity(env.config().steps);
    let mut obs = first;
    while !env.is_done() {
        let a = policy.action(&obs)?;
        let out = env.step(&a)?;
        obs = out.observation;
        rows.push(TraceRow {
            step: env.steps_taken(),
            observation: obs.clone(),
            terms: out.terms,
            reward: out.reward,
        });
    }
    Ok(rows)
}

/// Greedy reward curves of one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct MilestoneCurve {
    pub checkpoint: PathBuf,
    /// Training episodes completed when the checkpoint was written.
    pub train_episode: u64,
    /// `episodes x steps` rewards.
    pub rewards: Vec<Vec<f64>>,
}

impl MilestoneCurve {
    pub fn cumulative(&self) -> Vec<f64> {
        self.rewards.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Phase 1: every checkpoint runs the same seeded suite of random-target
/// episodes without exploration noise.
pub fn run_phase1(
    checkpoints: &[PathBuf],
    plant: &Plant,
    episode: &EpisodeConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<MilestoneCurve>, EvalError> {
    if checkpoints.is_empty() {
        return Err(EvalError::NoCheckpoints);
    }
    let mut curves = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        let ckpt = checkpoint::load(path).map_err(|source| EvalError::CheckpointUnreadable {
            path: path.clone(),
            source,
        })?;
        let actor = ckpt.agent.actor;
        let mut rewards = Vec::with_capacity(episodes);
        for i in 0..episodes {
            let mut rng = stream(seed, Domain::MilestoneEpisode, i as u64);
            let mut env = OcularEnv::new(plant.clone(), episode.clone(), 0);
            let first = env.reset_with(&mut rng, ResetOptions::default());
            rewards.push(run_episode(&mut env, first, &mut Greedy(&actor))?.rewards);
        }
        curves.push(MilestoneCurve {
            checkpoint: path.clone(),
            train_episode: ckpt.episodes_done,
            rewards,
        });
    }
    Ok(curves)
}

/// Milestone checkpoints in a directory (`m<index>_<episode>.ckpt`), by index.
pub fn milestone_checkpoints(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let entries = std::fs::read_dir(dir).map_err(|source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut found = Vec::new();
    for e in entries {
        let path = e
            .map_err(|source| EvalError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_prefix('m').and_then(|n| n.strip_suffix(".ckpt")) else {
            continue;
        };
        let Some((idx, ep)) = stem.split_once('_') else {
            continue;
        };
        if let (Ok(idx), Ok(_)) = (idx.parse::<usize>(), ep.parse::<usize>()) {
            found.push((idx, path));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Phase 2: `episodes_per_point` episodes at each grid point. Each point
/// draws from its own stream, so results do not depend on `workers`.
pub fn run_phase2<F, P>(
    make_policy: F,
    grid: &GridSpec,
    plant: &Plant,
    episode: &EpisodeConfig,
    seed: u64,
    workers: usize,
) -> Result<Vec<PointTrace>, EvalError>
where
    F: Fn(usize) -> P + Sync,
    P: Policy,
{
    let config = EpisodeConfig {
        steps: grid.steps,
        ..episode.clone()
    };
    let run_point = |k: usize| -> Result<PointTrace, EvalError> {
        let (dy, dz) = grid.points[k];
        let mut rng = stream(seed, Domain::GridPoint, k as u64);
        let mut policy = make_policy(k);
        let mut env = OcularEnv::new(plant.clone(), config.clone(), 0);
        let opts = ResetOptions {
            displacement: Some((dy, dz)),
            jitter_rad: grid.jitter_rad,
        };
        let mut episodes = Vec::with_capacity(grid.episodes_per_point);
        for _ in 0..grid.episodes_per_point {
            let first = env.reset_with(&mut rng, opts);
            episodes.push(run_episode(&mut env, first, &mut policy)?);
        }
        Ok(PointTrace { dy, dz, episodes })
    };
    let n = grid.points.len();
    if workers <= 1 {
        return (0..n).map(run_point).collect();
    }
    let results: Vec<Result<PointTrace, EvalError>> = std::thread::scope(|scope| {
        let run_point = &run_point;
        let chunks: Vec<Vec<usize>> = (0..workers.min(n))
            .map(|w| (w..n).step_by(workers.min(n)).collect())
            .collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|ks| scope.spawn(move || ks.into_iter().map(|k| (k, run_point(k))).collect::<Vec<_>>()))
            .collect();
        let mut all: Vec<(usize, Result<PointTrace, EvalError>)> = handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation worker panicked"))
            .collect();
        all.sort_by_key(|(k, _)| *k);
        all.into_iter().map(|(_, r)| r).collect()
    });
    results.into_iter().collect()
}
