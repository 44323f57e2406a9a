//! Episodic fixation task on top of the binocular plant.
//!
//! Each episode places a target at `target_base + (0, dy, dz)` and asks the
//! policy to bring both points of gaze (POG) onto it. One step advances the
//! plant by `dt` under twelve muscle excitations.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EnvError, GeometryError, PlantError};
use crate::plant::{EyeState, Plant, PlantState};
use crate::vecmath::{fick_to_quat, quat_to_fick_lossy, ray_plane_x, FickAngles, Vec3};

pub const OBS_DIM: usize = 27;
pub const ACTION_DIM: usize = 12;
/// Reward assigned to a step whose plant diverged or whose gaze left the
/// target hemisphere. Lower than any reachable fixation reward.
pub const FAILURE_REWARD: f64 = -200.0;
/// POG coordinates are clipped to this box when gaze is degenerate.
const POG_CLIP: f64 = 10.0;

/// Observation layout offsets.
pub mod layout {
    pub const TARGET: usize = 0;
    pub const POG_RIGHT: usize = 3;
    pub const POG_LEFT: usize = 6;
    pub const FICK_RIGHT: usize = 9;
    pub const FICK_LEFT: usize = 12;
    pub const ACTIVATIONS: usize = 15;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    fn vec3_at(&self, offset: usize) -> Vec3 {
        Vec3::new(self.0[offset], self.0[offset + 1], self.0[offset + 2])
    }

    pub fn target(&self) -> Vec3 {
        self.vec3_at(layout::TARGET)
    }

    pub fn pog_right(&self) -> Vec3 {
        self.vec3_at(layout::POG_RIGHT)
    }

    pub fn pog_left(&self) -> Vec3 {
        self.vec3_at(layout::POG_LEFT)
    }

    pub fn activations(&self) -> &[f64] {
        &self.0[layout::ACTIVATIONS..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Twelve excitations in [0, 1]: right LR, MR, SR, IR, SO, IO then left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionVector(pub [f64; ACTION_DIM]);

impl ActionVector {
    /// Clamps every entry into [0, 1]; NaN becomes 0.
    pub fn new(values: [f64; ACTION_DIM]) -> Self {
        ActionVector(values.map(clamp_unit))
    }

    pub fn from_slice(values: &[f64]) -> Option<Self> {
        let arr: [f64; ACTION_DIM] = values.try_into().ok()?;
        Some(Self::new(arr))
    }

    pub fn zeros() -> Self {
        ActionVector([0.0; ACTION_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Weights of the five reward terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights(pub [f64; 5]);

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights([16.0, 16.0, 32.0, 64.0, 64.0])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardTerms {
    pub dist_ro: f64,
    pub dist_lo: f64,
    pub dist_lr: f64,
    pub lr_y: f64,
    pub lr_z: f64,
    pub r: f64,
}

impl RewardTerms {
    /// Terms for a given pair of POGs and target; `r` uses `weights`.
    pub fn measure(pog_r: Vec3, pog_l: Vec3, target: Vec3, weights: &RewardWeights) -> Self {
        let mut terms = RewardTerms {
            dist_ro: pog_r.distance(target),
            dist_lo: pog_l.distance(target),
            dist_lr: pog_r.distance(pog_l),
            lr_y: pog_r.y - pog_l.y,
            lr_z: detect_crossed(pog_r, pog_l),
            r: 0.0,
        };
        terms.r = compute_reward(&terms, weights);
        terms
    }

    fn failure() -> Self {
        RewardTerms {
            r: FAILURE_REWARD,
            ..Default::default()
        }
    }
}

/// `-w1 d_RO^2 - w2 d_LO^2 - w3 d_LR - w4 lr_y^2 - w5 lr_z`
pub fn compute_reward(terms: &RewardTerms, w: &RewardWeights) -> f64 {
    let w = &w.0;
    -w[0] * terms.dist_ro * terms.dist_ro
        - w[1] * terms.dist_lo * terms.dist_lo
        - w[2] * terms.dist_lr
        - w[3] * terms.lr_y * terms.lr_y
        - w[4] * terms.lr_z
}

/// 1 when the right POG lies to the left of the left POG; equality is not crossed.
pub fn detect_crossed(pog_r: Vec3, pog_l: Vec3) -> f64 {
    if pog_r.z < pog_l.z {
        1.0
    } else {
        0.0
    }
}

/// Where the eye's line of sight meets the plane `x = target_x`.
pub fn compute_pog(eye: &EyeState, eye_center: Vec3, target_x: f64) -> Result<Vec3, GeometryError> {
    ray_plane_x(eye_center, eye.gaze(), target_x)
}

fn pog_or_clipped(eye: &EyeState, eye_center: Vec3, target_x: f64) -> (Vec3, bool) {
    match compute_pog(eye, eye_center, target_x) {
        Ok(p) if p.is_finite() && p.y.abs() <= POG_CLIP && p.z.abs() <= POG_CLIP => (p, true),
        _ => {
            let g = eye.gaze();
            let p = eye_center + g * (target_x / g.x.abs().max(1e-3));
            let clip = |v: f64| v.clamp(-POG_CLIP, POG_CLIP);
            (Vec3::new(target_x, clip(p.y), clip(p.z)), false)
        }
    }
}

/// 27-value observation for a plant state. Degenerate gaze yields a clipped
/// but finite POG.
pub fn build_observation(plant: &PlantState, target: Vec3) -> Observation {
    let mut o = [0.0; OBS_DIM];
    let mut put = |offset: usize, v: [f64; 3]| o[offset..offset + 3].copy_from_slice(&v);
    put(layout::TARGET, target.to_array());
    let (pog_r, _) = pog_or_clipped(&plant.right, plant.eye_centers[0], target.x);
    let (pog_l, _) = pog_or_clipped(&plant.left, plant.eye_centers[1], target.x);
    put(layout::POG_RIGHT, pog_r.to_array());
    put(layout::POG_LEFT, pog_l.to_array());
    put(layout::FICK_RIGHT, quat_to_fick_lossy(plant.right.q).to_array());
    put(layout::FICK_LEFT, quat_to_fick_lossy(plant.left.q).to_array());
    o[layout::ACTIVATIONS..].copy_from_slice(&plant.activations());
    Observation(o)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub target_base: Vec3,
    pub dy_range: (f64, f64),
    pub dz_range: (f64, f64),
    pub steps: usize,
    pub dt: f64,
    pub weights: RewardWeights,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            target_base: Vec3::X,
            dy_range: (-0.16, 0.16),
            dz_range: (-0.32, 0.32),
            steps: 100,
            dt: 0.01,
            weights: RewardWeights::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResetOptions {
    /// Fixed `(dy, dz)` instead of a random draw.
    pub displacement: Option<(f64, f64)>,
    /// Half-width of a uniform initial yaw/pitch perturbation per eye (rad).
    pub jitter_rad: f64,
}

impl ResetOptions {
    pub fn displaced(dy: f64, dz: f64) -> Self {
        Self {
            displacement: Some((dy, dz)),
            jitter_rad: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub terms: RewardTerms,
    /// Set when the step ended the episode through divergence or degenerate gaze.
    pub failure: Option<String>,
}

/// One environment instance with its own RNG stream.
pub struct OcularEnv {
    plant: Plant,
    config: EpisodeConfig,
    state: PlantState,
    target: Vec3,
    steps_taken: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl OcularEnv {
    pub fn new(plant: Plant, config: EpisodeConfig, seed: u64) -> Self {
        let state = plant.reset();
        OcularEnv {
            plant,
            target: config.target_base,
            config,
            state,
            steps_taken: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn plant_state(&self) -> &PlantState {
        &self.state
    }

    pub fn target(&self) -> Vec3 {
        self.target
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Resets using the environment's own RNG.
    pub fn reset(&mut self, options: ResetOptions) -> Observation {
        let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
        let obs = self.reset_with(&mut rng, options);
        self.rng = rng;
        obs
    }

    /// Resets drawing the displacement (and jitter) from `rng`.
    pub fn reset_with<R: Rng + ?Sized>(&mut self, rng: &mut R, options: ResetOptions) -> Observation {
        let (dy, dz) = match options.displacement {
            Some(d) => d,
            None => (
                sample_range(rng, self.config.dy_range),
                sample_range(rng, self.config.dz_range),
            ),
        };
        self.target = self.config.target_base + Vec3::new(0.0, dy, dz);
        self.state = if options.jitter_rad > 0.0 {
            let j = options.jitter_rad;
            let mut q = || {
                let yaw = rng.random_range(-j..=j);
                let pitch = rng.random_range(-j..=j);
                fick_to_quat(FickAngles::new(yaw, pitch, 0.0))
            };
            let (qr, ql) = (q(), q());
            self.plant.state_at(qr, ql)
        } else {
            self.plant.reset()
        };
        self.steps_taken = 0;
        self.done = false;
        build_observation(&self.state, self.target)
    }

    pub fn observation(&self) -> Observation {
        build_observation(&self.state, self.target)
    }

    /// Reward terms of the current state.
    pub fn terms(&self) -> Result<RewardTerms, GeometryError> {
        let pog_r = compute_pog(&self.state.right, self.state.eye_centers[0], self.target.x)?;
        let pog_l = compute_pog(&self.state.left, self.state.eye_centers[1], self.target.x)?;
        Ok(RewardTerms::measure(pog_r, pog_l, self.target, &self.config.weights))
    }

    pub fn step(&mut self, action: &ActionVector) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let action = ActionVector::new(action.0);
        self.steps_taken += 1;
        let failure = match self.plant.step(&self.state, &action.0, self.config.dt) {
            Ok(next) => {
                self.state = next;
                match self.terms() {
                    Ok(terms) => {
                        self.done = self.steps_taken >= self.config.steps;
                        return Ok(StepOutcome {
                            observation: self.observation(),
                            reward: terms.r,
                            done: self.done,
                            terms,
                            failure: None,
                        });
                    }
                    Err(e) => e.to_string(),
                }
            }
            Err(PlantError::Diverged(msg)) => msg,
            Err(PlantError::Geometry(e)) => e.to_string(),
        };
        self.done = true;
        Ok(StepOutcome {
            observation: self.observation(),
            reward: FAILURE_REWARD,
            done: true,
            terms: RewardTerms::failure(),
            failure: Some(failure),
        })
    }
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// One row of an exported episode trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub observation: Observation,
    pub terms: RewardTerms,
    pub reward: f64,
}

pub fn trace_header() -> Vec<String> {
    let mut h = vec!["step".to_string()];
    for prefix in ["target", "pog_r", "pog_l"] {
        for axis in ["x", "y", "z"] {
            h.push(format!("{prefix}_{axis}"));
        }
    }
    for prefix in ["fick_r", "fick_l"] {
        for angle in ["yaw", "pitch", "torsion"] {
            h.push(format!("{prefix}_{angle}"));
        }
    }
    h.extend((0..ACTION_DIM).map(|i| format!("act_{i}")));
    h.extend(
        ["dist_RO", "dist_LO", "dist_LR", "lr_y", "lr_z", "reward"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// Writes an episode trace as CSV.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header())?;
    for row in rows {
        let mut rec = vec![row.step.to_string()];
        rec.extend(row.observation.0.iter().map(|v| v.to_string()));
        let t = &row.terms;
        rec.extend([t.dist_ro, t.dist_lo, t.dist_lr, t.lr_y, t.lr_z, row.reward].map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
