use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::checkpoint::{self, Checkpoint, ReplaySnapshot, RngState};
use crate::env::{ActionVector, EpisodeConfig, OcularEnv, ResetOptions};
use crate::error::TrainError;
use crate::netcore::Actor;
use crate::plant::Plant;
use crate::seeding::{stream, Domain};

use super::agent::Agent;
use super::milestone::{rolling_mean, MilestoneRecord, MilestoneRule};
use super::noise::{decayed_sigma, OuNoise};
use super::replay::{ReplayBuffer, Transition};

pub const LOG_FILE: &str = "train_log.csv";
pub const LOG_HEADER: &str = "episode,cumulative_reward,rolling_mean,milestone_flag,noise_sigma,critic_loss_mean";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const RESUME_CHECKPOINT: &str = "resume.ckpt";
pub const DIVERGED_CHECKPOINT: &str = "diverged.ckpt";

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub batch: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_dt: f64,
    pub sigma_decay: f64,
    /// Updates start once the buffer holds this many batches.
    pub warmup_batches: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub milestone: MilestoneRule,
    pub seed: u64,
    pub workers: usize,
    /// Write `resume.ckpt` every this many episodes; 0 disables.
    pub checkpoint_every: usize,
    /// Include the replay buffer in resume and final checkpoints.
    pub checkpoint_replay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 10_000,
            batch: 64,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            gamma: 0.96,
            tau: 1e-3,
            buffer_capacity: 1_000_000,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            ou_dt: 1.0,
            sigma_decay: 0.999,
            warmup_batches: 10,
            actor_hidden: vec![64, 64, 64],
            critic_hidden: vec![64, 64, 64],
            milestone: MilestoneRule::default(),
            seed: 0,
            workers: 1,
            checkpoint_every: 1000,
            checkpoint_replay: true,
        }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    /// Completed episodes, starting at 1.
    pub episode: usize,
    pub cumulative_reward: f64,
    pub rolling_mean: f64,
    pub milestone: bool,
    pub noise_sigma: f64,
    /// Mean critic loss over the episode's updates, if any ran.
    pub critic_loss_mean: Option<f64>,
}

impl LogRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.episode,
            self.cumulative_reward,
            self.rolling_mean,
            self.milestone as u8,
            self.noise_sigma,
            self.critic_loss_mean.map(|v| v.to_string()).unwrap_or_default()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub log: Vec<LogRow>,
    pub milestones: Vec<MilestoneRecord>,
    pub final_checkpoint: Option<PathBuf>,
}

/// Owns all learner state; environments are created per episode.
pub struct Trainer {
    pub config: TrainConfig,
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    pub noise: OuNoise,
    pub history: Vec<f64>,
    pub best: Option<f64>,
    pub milestones: Vec<MilestoneRecord>,
    plant: Plant,
    episode_config: EpisodeConfig,
}

struct EpisodeOutcome {
    cumulative: f64,
    loss_sum: f64,
    updates: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, plant: Plant, episode_config: EpisodeConfig) -> Self {
        let mut init = stream(config.seed, Domain::NetInit, 0);
        let agent = Agent::new(
            &config.actor_hidden,
            &config.critic_hidden,
            config.lr_actor,
            config.lr_critic,
            config.gamma,
            config.tau,
            &mut init,
        );
        let buffer = ReplayBuffer::with_rng(config.buffer_capacity, stream(config.seed, Domain::ReplaySampling, 0));
        let noise = OuNoise::new(config.ou_theta, config.ou_sigma, config.ou_dt);
        Trainer {
            config,
            agent,
            buffer,
            noise,
            history: Vec::new(),
            best: None,
            milestones: Vec::new(),
            plant,
            episode_config,
        }
    }

    /// Continues from a checkpoint. A checkpoint without a replay section
    /// resumes with an empty buffer.
    pub fn from_checkpoint(
        config: TrainConfig,
        plant: Plant,
        episode_config: EpisodeConfig,
        ckpt: Checkpoint,
    ) -> Result<Self, TrainError> {
        let rng = ckpt.sampler.restore();
        let buffer = match &ckpt.replay {
            Some(snap) => snap.restore(rng)?,
            None => ReplayBuffer::with_rng(config.buffer_capacity, rng),
        };
        let mut agent = ckpt.agent;
        agent.gamma = config.gamma;
        agent.tau = config.tau;
        agent.actor_opt.lr = config.lr_actor;
        agent.critic_opt.lr = config.lr_critic;
        Ok(Trainer {
            agent,
            buffer,
            noise: ckpt.noise,
            history: ckpt.history,
            best: ckpt.best,
            milestones: ckpt.milestones,
            config,
            plant,
            episode_config,
        })
    }

    pub fn episodes_done(&self) -> usize {
        self.history.len()
    }

    pub fn checkpoint(&self, label: &str, with_replay: bool) -> Checkpoint {
        Checkpoint {
            label: label.to_string(),
            created_by: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            seed: self.config.seed,
            episodes_done: self.history.len() as u64,
            agent: self.agent.clone(),
            noise: self.noise.clone(),
            sampler: RngState::capture(self.buffer.rng()),
            history: self.history.clone(),
            best: self.best,
            milestones: self.milestones.clone(),
            replay: with_replay.then(|| ReplaySnapshot::capture(&self.buffer)),
        }
    }

    /// Trains until `config.episodes` episodes are complete. With `out_dir`,
    /// appends to the training log and writes milestone, resume and final
    /// checkpoints there.
    pub fn run(&mut self, out_dir: Option<&Path>) -> Result<TrainSummary, TrainError> {
        self.run_with(out_dir, |_| {})
    }

    /// [`Trainer::run`] with a callback after every logged episode.
    pub fn run_with<F: FnMut(&LogRow)>(
        &mut self,
        out_dir: Option<&Path>,
        mut on_episode: F,
    ) -> Result<TrainSummary, TrainError> {
        let mut log_file = match out_dir {
            Some(dir) => Some(open_log(dir, self.history.is_empty())?),
            None => None,
        };
        let mut log = Vec::new();
        let mut new_milestones = Vec::new();
        while self.history.len() < self.config.episodes {
            let first = self.history.len();
            let outcomes = if self.config.workers > 1 {
                let n = self.config.workers.min(self.config.episodes - first);
                self.parallel_round(first, n)
            } else {
                self.train_episode(first).map(|o| vec![o])
            };
            let outcomes = match outcomes {
                Ok(o) => o,
                Err(e) => return Err(self.diverged(e, out_dir)),
            };
            for (k, o) in outcomes.into_iter().enumerate() {
                let row = self.record_episode(first + k, o, out_dir, &mut new_milestones)?;
                if let Some((path, w)) = log_file.as_mut() {
                    writeln!(w, "{}", row.to_csv_line()).map_err(|e| io_err(path, e))?;
                    w.flush().map_err(|e| io_err(path, e))?;
                }
                on_episode(&row);
                log.push(row);
            }
            let done = self.history.len();
            if let Some(dir) = out_dir {
                let every = self.config.checkpoint_every;
                if every > 0 && done % every == 0 && done < self.config.episodes {
                    let ckpt = self.checkpoint("resume", self.config.checkpoint_replay);
                    checkpoint::save(&ckpt, &dir.join(RESUME_CHECKPOINT))?;
                }
            }
        }
        let final_checkpoint = match out_dir {
            Some(dir) => {
                let path = dir.join(FINAL_CHECKPOINT);
                checkpoint::save(&self.checkpoint("final", self.config.checkpoint_replay), &path)?;
                Some(path)
            }
            None => None,
        };
        Ok(TrainSummary {
            log,
            milestones: new_milestones,
            final_checkpoint,
        })
    }

    fn record_episode(
        &mut self,
        index: usize,
        o: EpisodeOutcome,
        out_dir: Option<&Path>,
        new_milestones: &mut Vec<MilestoneRecord>,
    ) -> Result<LogRow, TrainError> {
        self.history.push(o.cumulative);
        let episode = self.history.len();
        let milestone = self.config.milestone.check(&self.history, self.best);
        if let Some(mean) = milestone {
            self.best = Some(mean);
            let idx = self.milestones.len() + 1;
            let path = out_dir
                .map(|d| d.join(format!("m{idx}_{episode}.ckpt")))
                .unwrap_or_default();
            let rec = MilestoneRecord {
                index: idx,
                episode,
                rolling_mean: mean,
                checkpoint: path.clone(),
            };
            self.milestones.push(rec.clone());
            if out_dir.is_some() {
                checkpoint::save(&self.checkpoint(&format!("milestone {idx}"), false), &path)?;
            }
            new_milestones.push(rec);
        }
        Ok(LogRow {
            episode,
            cumulative_reward: o.cumulative,
            rolling_mean: rolling_mean(&self.history, self.config.milestone.window),
            milestone: milestone.is_some(),
            noise_sigma: self.sigma_for(index),
            critic_loss_mean: (o.updates > 0).then(|| o.loss_sum / o.updates as f64),
        })
    }

    fn sigma_for(&self, episode: usize) -> f64 {
        decayed_sigma(self.config.ou_sigma, self.config.sigma_decay, episode as u64)
    }

    fn new_env(&self) -> OcularEnv {
        OcularEnv::new(self.plant.clone(), self.episode_config.clone(), 0)
    }

    fn learn_ready(&self) -> bool {
        self.buffer.len() >= (self.config.warmup_batches * self.config.batch).max(self.config.batch)
    }

    fn learn_step(&mut self) -> Result<f64, TrainError> {
        let batch = self.buffer.sample(self.config.batch)?;
        let loss = self.agent.critic_update(&batch)?;
        self.agent.actor_update(batch.states.view())?;
        self.agent.soft_update_targets()?;
        Ok(loss)
    }

    /// Single-worker episode with learning interleaved after every step.
    fn train_episode(&mut self, index: usize) -> Result<EpisodeOutcome, TrainError> {
        let mut rng = stream(self.config.seed, Domain::TrainEpisode, index as u64);
        let mut env = self.new_env();
        let mut obs = env.reset_with(&mut rng, ResetOptions::default());
        self.noise.sigma = self.sigma_for(index);
        self.noise.reset();
        let mut out = EpisodeOutcome {
            cumulative: 0.0,
            loss_sum: 0.0,
            updates: 0,
        };
        while !env.is_done() {
            let action = explore(&self.agent.actor, &mut self.noise, &obs, &mut rng)?;
            let step = env.step(&action)?;
            out.cumulative += step.reward;
            self.buffer.push(Transition {
                s: obs,
                a: action,
                r: step.reward,
                s_next: step.observation,
                done: step.failure.is_some(),
            });
            obs = step.observation;
            if self.learn_ready() {
                out.loss_sum += self.learn_step()?;
                out.updates += 1;
            }
        }
        Ok(out)
    }

    /// Collects `n` episodes in parallel with a frozen actor, then replays
    /// their transitions through the learner in episode order.
    fn parallel_round(&mut self, first: usize, n: usize) -> Result<Vec<EpisodeOutcome>, TrainError> {
        let actor = &self.agent.actor;
        let template = &self.noise;
        let collected: Vec<Result<(Vec<Transition>, f64), TrainError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..n)
                .map(|k| {
                    let index = first + k;
                    let mut env = self.new_env();
                    let mut noise = template.clone();
                    noise.sigma = self.sigma_for(index);
                    let seed = self.config.seed;
                    scope.spawn(move || {
                        let mut rng = stream(seed, Domain::TrainEpisode, index as u64);
                        let mut obs = env.reset_with(&mut rng, ResetOptions::default());
                        noise.reset();
                        let mut trs = Vec::with_capacity(env.config().steps);
                        let mut total = 0.0;
                        while !env.is_done() {
                            let action = explore(actor, &mut noise, &obs, &mut rng)?;
                            let step = env.step(&action)?;
                            total += step.reward;
                            trs.push(Transition {
                                s: obs,
                                a: action,
                                r: step.reward,
                                s_next: step.observation,
                                done: step.failure.is_some(),
                            });
                            obs = step.observation;
                        }
                        Ok((trs, total))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut outcomes = Vec::with_capacity(n);
        for res in collected {
            let (trs, cumulative) = res?;
            let mut o = EpisodeOutcome {
                cumulative,
                loss_sum: 0.0,
                updates: 0,
            };
            for t in trs {
                self.buffer.push(t);
                if self.learn_ready() {
                    o.loss_sum += self.learn_step()?;
                    o.updates += 1;
                }
            }
            outcomes.push(o);
        }
        Ok(outcomes)
    }

    fn diverged(&self, err: TrainError, out_dir: Option<&Path>) -> TrainError {
        match err {
            TrainError::Diverged { reason, .. } => {
                let dump = out_dir.and_then(|d| {
                    let path = d.join(DIVERGED_CHECKPOINT);
                    checkpoint::save(&self.checkpoint("diverged", false), &path).ok().map(|_| path)
                });
                TrainError::Diverged {
                    episode: self.history.len() + 1,
                    reason,
                    dump,
                }
            }
            other => other,
        }
    }
}

/// Policy action plus exploration noise, clamped to the unit box.
fn explore<R: Rng + ?Sized>(
    actor: &Actor,
    noise: &mut OuNoise,
    obs: &crate::env::Observation,
    rng: &mut R,
) -> Result<ActionVector, TrainError> {
    let a = actor.act(obs)?;
    let n = noise.sample(rng);
    Ok(ActionVector::new(std::array::from_fn(|i| a.0[i] + n[i])))
}

fn io_err(path: &Path, source: std::io::Error) -> TrainError {
    TrainError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn open_log(dir: &Path, fresh: bool) -> Result<(PathBuf, BufWriter<File>), TrainError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(LOG_FILE);
    let exists = path.exists();
    let file = if fresh || !exists {
        File::create(&path)
    } else {
        OpenOptions::new().append(true).open(&path)
    }
    .map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    if fresh || !exists {
        writeln!(w, "{LOG_HEADER}").map_err(|e| io_err(&path, e))?;
    }
    Ok((path, w))
}

/// Reads a training log back (for plotting and comparisons).
pub fn read_log(path: &Path) -> Result<Vec<LogRow>, TrainError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |line: usize, what: &str| TrainError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: {what}")),
    };
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i + 2, "expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
        rows.push(LogRow {
            episode: f[0].parse().map_err(|_| bad(i + 2, "bad episode"))?,
            cumulative_reward: num(f[1])?,
            rolling_mean: num(f[2])?,
            milestone: f[3] == "1",
            noise_sigma: num(f[4])?,
            critic_loss_mean: if f[5].is_empty() { None } else { Some(num(f[5])?) },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(episodes: usize) -> TrainConfig {
        TrainConfig {
            episodes,
            batch: 16,
            warmup_batches: 2,
            actor_hidden: vec![16, 16, 16],
            critic_hidden: vec![16, 16, 16],
            milestone: MilestoneRule {
                window: 2,
                ..MilestoneRule::default()
            },
            seed: 7,
            checkpoint_every: 0,
            ..TrainConfig::default()
        }
    }

    fn short_episodes() -> EpisodeConfig {
        EpisodeConfig {
            steps: 20,
            ..EpisodeConfig::default()
        }
    }

    #[test]
    fn zero_episodes_writes_initial_checkpoint_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Trainer::new(tiny_config(0), Plant::default(), short_episodes());
        let initial = t.agent.clone();
        let s = t.run(Some(dir.path())).unwrap();
        assert!(s.log.is_empty());
        assert_eq!(t.agent, initial);
        let files: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".ckpt"))
            .collect();
        assert_eq!(files, vec![FINAL_CHECKPOINT.to_string()]);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let run = || {
            let mut t = Trainer::new(tiny_config(6), Plant::default(), short_episodes());
            t.run(None).unwrap().log
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert!(a.iter().any(|r| r.critic_loss_mean.is_some()));
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let full = {
            let mut t = Trainer::new(tiny_config(6), Plant::default(), short_episodes());
            t.run(None).unwrap().log
        };
        let mut first = Trainer::new(tiny_config(3), Plant::default(), short_episodes());
        first.run(None).unwrap();
        let bytes = checkpoint::encode(&first.checkpoint("resume", true));
        let ckpt = checkpoint::decode(&bytes).unwrap();
        let mut second = Trainer::from_checkpoint(tiny_config(6), Plant::default(), short_episodes(), ckpt).unwrap();
        let rest = second.run(None).unwrap().log;
        assert_eq!(rest, full[3..].to_vec());
    }

    #[test]
    fn log_file_round_trips_and_appends() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Trainer::new(tiny_config(2), Plant::default(), short_episodes());
        let a = t.run(Some(dir.path())).unwrap().log;
        t.config.episodes = 4;
        let b = t.run(Some(dir.path())).unwrap().log;
        let back = read_log(&dir.path().join(LOG_FILE)).unwrap();
        assert_eq!(back, [a, b].concat());
        assert_eq!(back.iter().map(|r| r.episode).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn milestones_write_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Trainer::new(tiny_config(4), Plant::default(), short_episodes());
        let s = t.run(Some(dir.path())).unwrap();
        assert!(!s.milestones.is_empty());
        for m in &s.milestones {
            let name = m.checkpoint.file_name().unwrap().to_string_lossy().into_owned();
            assert_eq!(name, format!("m{}_{}.ckpt", m.index, m.episode));
            let c = checkpoint::load(&m.checkpoint).unwrap();
            assert!(c.replay.is_none());
            assert_eq!(c.episodes_done as usize, m.episode);
        }
        assert!(s.milestones.windows(2).all(|w| w[1].rolling_mean > w[0].rolling_mean));
    }

    #[test]
    fn parallel_collection_runs() {
        let mut cfg = tiny_config(4);
        cfg.workers = 3;
        let mut t = Trainer::new(cfg, Plant::default(), short_episodes());
        let log = t.run(None).unwrap().log;
        assert_eq!(log.len(), 4);
        assert!(log.iter().all(|r| r.cumulative_reward.is_finite()));
    }

    #[test]
    fn stored_actions_are_executed_actions() {
        let mut t = Trainer::new(tiny_config(1), Plant::default(), short_episodes());
        t.run(None).unwrap();
        assert!(t.buffer.items().iter().all(|tr| tr.a.0.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_eq!(t.buffer.len(), 20);
    }
}
