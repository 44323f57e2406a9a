//! Run configuration in TOML.
//!
//! Every key is optional; an empty file yields the defaults below. Unknown
//! keys are rejected. Muscle entries override the right-eye geometry per
//! muscle (`[muscles.LR]` ... `[muscles.IO]`); the left eye mirrors it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ddpg::{MilestoneRule, TrainConfig};
use crate::env::{EpisodeConfig, RewardWeights};
use crate::error::ConfigError;
use crate::evalkit::GridSpec;
use crate::muscle::{default_right_muscles, muscle_path, MuscleKind, MuscleParams};
use crate::plant::{critical_damping, solid_sphere_inertia, Plant, PlantParams};
use crate::vecmath::{UnitQuat, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; the command line and `OCULORL_OUT` take precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub plant: PlantSection,
    pub muscles: BTreeMap<String, MuscleSection>,
    pub episode: EpisodeSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    /// kg
    pub globe_mass: f64,
    /// m
    pub globe_radius: f64,
    /// Passive stiffness, N m / rad.
    pub k_p: f64,
    /// Passive damping, N m s / rad; critical damping when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_p: Option<f64>,
    pub substeps: usize,
    /// Half the distance between the eye centres, m.
    pub eye_half_separation: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        PlantSection {
            globe_mass: crate::plant::DEFAULT_GLOBE_MASS,
            globe_radius: crate::muscle::DEFAULT_GLOBE_RADIUS,
            k_p: crate::plant::DEFAULT_K_P,
            c_p: None,
            substeps: crate::plant::DEFAULT_SUBSTEPS,
            eye_half_separation: crate::plant::DEFAULT_IPD_HALF,
        }
    }
}

/// Right-eye muscle overrides; absent fields keep the built-in values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuscleSection {
    /// Origin relative to the eye centre, m.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 3]>,
    /// Insertion direction in the globe frame at primary position.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub insertion_dir: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    /// Optimal fiber lengths per second.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_act: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_deact: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    /// Target plane distance along +x, m.
    pub target_depth: f64,
    pub dy_range: [f64; 2],
    pub dz_range: [f64; 2],
    pub steps: usize,
    /// Control period, s.
    pub dt: f64,
    pub reward_weights: [f64; 5],
}

impl Default for EpisodeSection {
    fn default() -> Self {
        let e = EpisodeConfig::default();
        EpisodeSection {
            target_depth: e.target_base.x,
            dy_range: [e.dy_range.0, e.dy_range.1],
            dz_range: [e.dz_range.0, e.dz_range.1],
            steps: e.steps,
            dt: e.dt,
            reward_weights: e.weights.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
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
    pub warmup_batches: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub milestone_window: usize,
    pub milestone_rel_margin: f64,
    pub milestone_min_margin: f64,
    pub workers: usize,
    pub checkpoint_every: usize,
    pub checkpoint_replay: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            episodes: t.episodes,
            batch: t.batch,
            lr_actor: t.lr_actor,
            lr_critic: t.lr_critic,
            gamma: t.gamma,
            tau: t.tau,
            buffer_capacity: t.buffer_capacity,
            ou_theta: t.ou_theta,
            ou_sigma: t.ou_sigma,
            ou_dt: t.ou_dt,
            sigma_decay: t.sigma_decay,
            warmup_batches: t.warmup_batches,
            actor_hidden: t.actor_hidden,
            critic_hidden: t.critic_hidden,
            milestone_window: t.milestone.window,
            milestone_rel_margin: t.milestone.rel_margin,
            milestone_min_margin: t.milestone.min_margin,
            workers: t.workers,
            checkpoint_every: t.checkpoint_every,
            checkpoint_replay: t.checkpoint_replay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub milestone_episodes: usize,
    pub grid_spacing: f64,
    pub episodes_per_point: usize,
    pub steps: usize,
    pub warmup_drop: usize,
    /// Half-width of the per-episode initial gaze perturbation, degrees.
    pub jitter_deg: f64,
    pub workers: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        let g = GridSpec::default();
        EvalSection {
            milestone_episodes: 10,
            grid_spacing: 0.1,
            episodes_per_point: g.episodes_per_point,
            steps: g.steps,
            warmup_drop: g.warmup_drop,
            jitter_deg: g.jitter_rad.to_degrees(),
            workers: 1,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: None,
            plant: PlantSection::default(),
            muscles: BTreeMap::new(),
            episode: EpisodeSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
        }
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
    (line, column)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be a non-negative number, got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<(), ConfigError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be at least 1"))
    }
}

fn range(key: &str, r: [f64; 2]) -> Result<(), ConfigError> {
    if r.iter().all(|v| v.is_finite()) && r[0] <= r[1] {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be finite [low, high] with low <= high, got {r:?}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::invalid("seed", "must fit in a signed 64-bit integer"));
        }
        let p = &self.plant;
        positive("plant.globe_mass", p.globe_mass)?;
        positive("plant.globe_radius", p.globe_radius)?;
        non_negative("plant.k_p", p.k_p)?;
        if let Some(c) = p.c_p {
            non_negative("plant.c_p", c)?;
        }
        at_least_one("plant.substeps", p.substeps)?;
        positive("plant.eye_half_separation", p.eye_half_separation)?;

        for (name, m) in &self.muscles {
            if MuscleKind::ALL.iter().all(|k| k.as_str() != name) {
                return Err(ConfigError::invalid(
                    format!("muscles.{name}"),
                    "unknown muscle; expected one of LR, MR, SR, IR, SO, IO",
                ));
            }
            let key = |f: &str| format!("muscles.{name}.{f}");
            for (field, v) in [
                ("l_opt", m.l_opt),
                ("l_slack", m.l_slack),
                ("f_max", m.f_max),
                ("v_max", m.v_max),
                ("tau_act", m.tau_act),
                ("tau_deact", m.tau_deact),
            ] {
                if let Some(v) = v {
                    positive(&key(field), v)?;
                }
            }
            if let Some(o) = m.origin {
                if !o.iter().all(|v| v.is_finite()) {
                    return Err(ConfigError::invalid(key("origin"), "must be finite"));
                }
            }
            if let Some(d) = m.insertion_dir {
                if Vec3::from_array(d).try_normalize().is_none() {
                    return Err(ConfigError::invalid(key("insertion_dir"), "must be a finite non-zero vector"));
                }
            }
        }
        let plant = self.plant_model();
        for m in plant.muscles.iter().take(6) {
            if let Err(e) = muscle_path(UnitQuat::IDENTITY, plant.params.eye_centers[0], m) {
                return Err(ConfigError::invalid(format!("muscles.{}", m.kind.as_str()), e.to_string()));
            }
            if m.rest_length() - m.l_slack <= 0.0 {
                return Err(ConfigError::invalid(
                    format!("muscles.{}.l_slack", m.kind.as_str()),
                    "leaves no fiber length at primary position",
                ));
            }
        }

        let e = &self.episode;
        positive("episode.target_depth", e.target_depth)?;
        range("episode.dy_range", e.dy_range)?;
        range("episode.dz_range", e.dz_range)?;
        at_least_one("episode.steps", e.steps)?;
        positive("episode.dt", e.dt)?;
        for (i, w) in e.reward_weights.iter().enumerate() {
            non_negative(&format!("episode.reward_weights[{i}]"), *w)?;
        }

        let t = &self.train;
        at_least_one("train.batch", t.batch)?;
        positive("train.lr_actor", t.lr_actor)?;
        positive("train.lr_critic", t.lr_critic)?;
        if !(t.gamma > 0.0 && t.gamma < 1.0) {
            return Err(ConfigError::invalid("train.gamma", "must lie in (0, 1)"));
        }
        if !(t.tau > 0.0 && t.tau <= 1.0) {
            return Err(ConfigError::invalid("train.tau", "must lie in (0, 1]"));
        }
        if t.buffer_capacity < t.batch {
            return Err(ConfigError::invalid("train.buffer_capacity", "must hold at least one batch"));
        }
        non_negative("train.ou_theta", t.ou_theta)?;
        non_negative("train.ou_sigma", t.ou_sigma)?;
        positive("train.ou_dt", t.ou_dt)?;
        if !(t.sigma_decay > 0.0 && t.sigma_decay <= 1.0) {
            return Err(ConfigError::invalid("train.sigma_decay", "must lie in (0, 1]"));
        }
        for (key, hidden) in [("train.actor_hidden", &t.actor_hidden), ("train.critic_hidden", &t.critic_hidden)] {
            if hidden.is_empty() || hidden.contains(&0) {
                return Err(ConfigError::invalid(key, "needs at least one layer, all sizes positive"));
            }
        }
        at_least_one("train.milestone_window", t.milestone_window)?;
        non_negative("train.milestone_rel_margin", t.milestone_rel_margin)?;
        non_negative("train.milestone_min_margin", t.milestone_min_margin)?;
        at_least_one("train.workers", t.workers)?;

        let v = &self.eval;
        at_least_one("eval.milestone_episodes", v.milestone_episodes)?;
        positive("eval.grid_spacing", v.grid_spacing)?;
        at_least_one("eval.episodes_per_point", v.episodes_per_point)?;
        at_least_one("eval.steps", v.steps)?;
        if v.warmup_drop >= v.steps {
            return Err(ConfigError::invalid("eval.warmup_drop", "must be below eval.steps"));
        }
        non_negative("eval.jitter_deg", v.jitter_deg)?;
        at_least_one("eval.workers", v.workers)?;
        Ok(())
    }

    pub fn right_muscles(&self) -> [MuscleParams; 6] {
        let mut right = default_right_muscles();
        for m in right.iter_mut() {
            m.globe_radius = self.plant.globe_radius;
            let Some(o) = self.muscles.get(m.kind.as_str()) else {
                continue;
            };
            if let Some(v) = o.origin {
                m.origin = Vec3::from_array(v);
            }
            if let Some(d) = o.insertion_dir {
                let v = Vec3::from_array(d);
                // Leave unit vectors bit-exact so resolved snapshots reproduce.
                if (v.norm() - 1.0).abs() > 1e-12 {
                    if let Some(u) = v.try_normalize() {
                        m.insertion_dir = u;
                    }
                } else {
                    m.insertion_dir = v;
                }
            }
            m.l_opt = o.l_opt.unwrap_or(m.l_opt);
            m.l_slack = o.l_slack.unwrap_or(m.l_slack);
            m.f_max = o.f_max.unwrap_or(m.f_max);
            m.v_max = o.v_max.unwrap_or(m.v_max);
            m.tau_act = o.tau_act.unwrap_or(m.tau_act);
            m.tau_deact = o.tau_deact.unwrap_or(m.tau_deact);
        }
        right
    }

    pub fn plant_params(&self) -> PlantParams {
        let p = &self.plant;
        let inertia = solid_sphere_inertia(p.globe_mass, p.globe_radius);
        PlantParams {
            inertia,
            k_p: p.k_p,
            c_p: p.c_p.unwrap_or_else(|| critical_damping(p.k_p, inertia)),
            substeps: p.substeps,
            eye_centers: [
                Vec3::new(0.0, 0.0, p.eye_half_separation),
                Vec3::new(0.0, 0.0, -p.eye_half_separation),
            ],
            globe_radius: p.globe_radius,
        }
    }

    pub fn plant_model(&self) -> Plant {
        Plant::new(self.plant_params(), &self.right_muscles())
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        let e = &self.episode;
        EpisodeConfig {
            target_base: Vec3::new(e.target_depth, 0.0, 0.0),
            dy_range: (e.dy_range[0], e.dy_range[1]),
            dz_range: (e.dz_range[0], e.dz_range[1]),
            steps: e.steps,
            dt: e.dt,
            weights: RewardWeights(e.reward_weights),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            episodes: t.episodes,
            batch: t.batch,
            lr_actor: t.lr_actor,
            lr_critic: t.lr_critic,
            gamma: t.gamma,
            tau: t.tau,
            buffer_capacity: t.buffer_capacity,
            ou_theta: t.ou_theta,
            ou_sigma: t.ou_sigma,
            ou_dt: t.ou_dt,
            sigma_decay: t.sigma_decay,
            warmup_batches: t.warmup_batches,
            actor_hidden: t.actor_hidden.clone(),
            critic_hidden: t.critic_hidden.clone(),
            milestone: MilestoneRule {
                window: t.milestone_window,
                rel_margin: t.milestone_rel_margin,
                min_margin: t.milestone_min_margin,
            },
            seed: self.seed,
            workers: t.workers,
            checkpoint_every: t.checkpoint_every,
            checkpoint_replay: t.checkpoint_replay,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        let v = &self.eval;
        GridSpec {
            points: GridSpec::square(v.grid_spacing),
            episodes_per_point: v.episodes_per_point,
            steps: v.steps,
            warmup_drop: v.warmup_drop,
            jitter_rad: v.jitter_deg.to_radians(),
        }
    }

    /// Same configuration with every muscle and the damping spelled out.
    pub fn resolved(&self) -> RunConfig {
        let mut out = self.clone();
        out.plant.c_p = Some(self.plant_params().c_p);
        out.muscles = self
            .right_muscles()
            .iter()
            .map(|m| {
                (
                    m.kind.as_str().to_string(),
                    MuscleSection {
                        origin: Some(m.origin.to_array()),
                        insertion_dir: Some(m.insertion_dir.to_array()),
                        l_opt: Some(m.l_opt),
                        l_slack: Some(m.l_slack),
                        f_max: Some(m.f_max),
                        v_max: Some(m.v_max),
                        tau_act: Some(m.tau_act),
                        tau_deact: Some(m.tau_deact),
                    },
                )
            })
            .collect();
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

/// Provenance of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub core_version: String,
    pub checkpoint_format: u32,
}

/// Run provenance plus the fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(run: RunInfo, config: &RunConfig) -> Self {
        Manifest {
            run,
            config: config.resolved(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    pub fn parse(text: &str) -> Result<Manifest, ConfigError> {
        let m: Manifest = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        m.config.validate()?;
        Ok(m)
    }

    /// `manifest_<command>.toml`, so commands sharing a directory keep their own.
    pub fn file_name(&self) -> String {
        format!("manifest_{}.toml", self.run.command.replace('-', "_"))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, ConfigError> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{compute_reward, RewardTerms};

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.train_config(), TrainConfig { seed: 0, ..TrainConfig::default() });
        assert_eq!(c.episode_config(), EpisodeConfig::default());
        assert_eq!(c.grid_spec(), GridSpec::default());
        assert_eq!(c.plant_model(), Plant::default());
    }

    #[test]
    fn weights_override_reaches_reward() {
        let c = parse_config("[episode]\nreward_weights = [1, 1, 1, 1, 1]\n").unwrap();
        let w = c.episode_config().weights;
        let t = RewardTerms {
            dist_ro: 0.5,
            dist_lo: 0.5,
            dist_lr: 0.25,
            lr_y: 0.5,
            lr_z: 1.0,
            r: 0.0,
        };
        assert_eq!(compute_reward(&t, &w), -(0.25 + 0.25 + 0.25 + 0.25 + 1.0));
    }

    #[test]
    fn negative_tau_act_names_the_key() {
        let err = parse_config("[muscles.LR]\ntau_act = -0.01\n").unwrap_err();
        match err {
            ConfigError::Validation { key, .. } => {
                assert_eq!(key, "muscles.LR.tau_act");
                assert!(key.contains("tau_act"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = parse_config("seed = 1\n\n[train]\nbogus = 3\n").unwrap_err();
        match err {
            ConfigError::Parse { line, column, message } => {
                assert_eq!((line, column), (4, 1));
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("[muscles.XX]\nl_opt = 0.03\n"), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn syntax_error_position() {
        match parse_config("seed = 1\nplant = [\n").unwrap_err() {
            ConfigError::Parse { line, .. } => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_cases() {
        for (text, key) in [
            ("[train]\ngamma = 1.0\n", "train.gamma"),
            ("[eval]\nwarmup_drop = 100\n", "eval.warmup_drop"),
            ("[episode]\ndy_range = [0.2, 0.1]\n", "episode.dy_range"),
            ("[plant]\nsubsteps = 0\n", "plant.substeps"),
            ("[train]\nactor_hidden = []\n", "train.actor_hidden"),
            ("[muscles.SO]\ninsertion_dir = [0, 0, 0]\n", "muscles.SO.insertion_dir"),
        ] {
            match parse_config(text) {
                Err(ConfigError::Validation { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn muscle_override_applies_to_both_eyes() {
        let c = parse_config("[muscles.MR]\nf_max = 2.5\n").unwrap();
        let plant = c.plant_model();
        assert_eq!(plant.muscles[1].f_max, 2.5);
        assert_eq!(plant.muscles[7].f_max, 2.5);
        assert_eq!(plant.muscles[0].f_max, 1.0);
    }

    #[test]
    fn resolved_snapshot_round_trips() {
        let c = parse_config("seed = 42\n[train]\nepisodes = 7\n").unwrap();
        let snap = c.resolved();
        let back = parse_config(&snap.to_toml()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.plant_model(), c.plant_model());
        assert_eq!(back.train_config(), c.train_config());
    }

    #[test]
    fn manifest_round_trips() {
        let cfg = parse_config("seed = 9\n[muscles.IO]\nf_max = 1.5\n").unwrap();
        let m = Manifest::new(
            RunInfo {
                command: "train".into(),
                args: vec!["--seed".into(), "9".into()],
                seed: 9,
                version: "x".into(),
                core_version: "y".into(),
                checkpoint_format: 1,
            },
            &cfg,
        );
        let back = Manifest::parse(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config.plant_model(), cfg.plant_model());
    }

    #[test]
    fn line_col_counts() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
