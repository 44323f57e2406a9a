//! Contract and invariant suites runnable outside the test harness.
//!
//! Each function measures something and reports it; thresholds live in
//! [`run_all`] and in the acceptance tests.

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ddpg::{actor_update_with, Agent, Batch};
use crate::env::{compute_reward, ActionVector, EpisodeConfig, OcularEnv, ResetOptions, RewardTerms, RewardWeights, ACTION_DIM, OBS_DIM};
use crate::error::NetError;
use crate::muscle::{activation_step, MuscleKind};
use crate::netcore::{gradient_check, Actor, ActionValue, Adam, Critic};
use crate::plant::{Plant, PlantState};
use crate::vecmath::{fick_to_quat, quat_to_fick_lossy, FickAngles};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult { name, passed, detail }
    }
}

/// Observation length, action length and range, control period.
pub fn dimensions(plant: &Plant, seed: u64) -> CheckResult {
    let cfg = EpisodeConfig::default();
    let mut env = OcularEnv::new(plant.clone(), cfg.clone(), seed);
    let obs = env.reset(ResetOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actor = Actor::new(&[64, 64, 64], &mut rng);
    let action = actor.act(&obs);
    let ok_action = action
        .as_ref()
        .map(|a| a.0.len() == ACTION_DIM && a.0.iter().all(|v| (0.0..=1.0).contains(v)))
        .unwrap_or(false);
    let stepped = action
        .ok()
        .and_then(|a| env.step(&a).ok())
        .map(|o| o.observation.0.len() == OBS_DIM)
        .unwrap_or(false);
    let passed = obs.0.len() == 27 && OBS_DIM == 27 && ACTION_DIM == 12 && ok_action && stepped && cfg.dt == 0.01;
    CheckResult::new(
        "dimensions",
        passed,
        format!("obs {} action {} dt {} s", obs.0.len(), ACTION_DIM, cfg.dt),
    )
}

/// Hand-evaluated reward cases as (computed, expected).
pub fn reward_cases(plant: &Plant) -> Vec<(f64, f64)> {
    let w = RewardWeights::default();
    let mut out = vec![(compute_reward(&RewardTerms::default(), &w), 0.0)];
    let t = RewardTerms {
        dist_ro: 0.1,
        dist_lo: 0.1,
        ..Default::default()
    };
    out.push((compute_reward(&t, &w), -16.0 * 0.01 * 2.0));
    let t = RewardTerms {
        dist_lr: 0.1,
        lr_y: 0.05,
        lr_z: 1.0,
        ..Default::default()
    };
    out.push((compute_reward(&t, &w), -32.0 * 0.1 - 64.0 * 0.0025 - 64.0));
    let mut env = OcularEnv::new(plant.clone(), EpisodeConfig::default(), 0);
    env.reset(ResetOptions::displaced(0.0, 0.0));
    let half = plant.params.eye_centers[0].z;
    let expected = -16.0 * 2.0 * half * half - 32.0 * 2.0 * half;
    let got = env.step(&ActionVector::zeros()).map(|o| o.reward).unwrap_or(f64::NAN);
    out.push((got, expected));
    out
}

/// Rotation after 200 ms of full excitation on one muscle.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSign {
    pub muscle: String,
    /// Positive away from the nose.
    pub abduction_deg: f64,
    /// Positive upward.
    pub elevation_deg: f64,
    /// Positive when the top of the eye turns away from the nose.
    pub excyclo_deg: f64,
    pub expected: &'static str,
    pub passed: bool,
}

pub const SIGN_PROTOCOL_STEPS: usize = 20;

pub fn action_signs(plant: &Plant) -> Vec<ActionSign> {
    (0..12)
        .map(|i| {
            let eye = i / 6;
            let m = &plant.muscles[i];
            let mut exc = [0.0; 12];
            exc[i] = 1.0;
            let mut s = plant.reset();
            let mut ok = true;
            for _ in 0..SIGN_PROTOCOL_STEPS {
                match plant.step(&s, &exc, 0.01) {
                    Ok(next) => s = next,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            let e = s.eye(eye);
            let temporal = m.side.temporal_sign();
            let gaze = e.gaze();
            let f = quat_to_fick_lossy(e.q);
            let abduction_deg = (gaze.z * temporal).atan2(gaze.x).to_degrees();
            let elevation_deg = gaze.y.asin().to_degrees();
            let excyclo_deg = (f.torsion_rad * temporal).to_degrees();
            let (expected, sign_ok) = match m.kind {
                MuscleKind::LR => ("abduction", abduction_deg > 0.0),
                MuscleKind::MR => ("adduction", abduction_deg < 0.0),
                MuscleKind::SR => ("supraduction", elevation_deg > 0.0),
                MuscleKind::IR => ("infraduction", elevation_deg < 0.0),
                MuscleKind::SO => ("incycloduction, infraduction", excyclo_deg < 0.0 && elevation_deg < 0.0),
                MuscleKind::IO => ("excycloduction, supraduction", excyclo_deg > 0.0 && elevation_deg > 0.0),
            };
            let other = plant.reset();
            let untouched = s.eye(1 - eye) == other.eye(1 - eye);
            ActionSign {
                muscle: m.name(),
                abduction_deg,
                elevation_deg,
                excyclo_deg,
                expected,
                passed: ok && sign_ok && untouched,
            }
        })
        .collect()
}

/// Largest deviation of the activation update from the analytic solution
/// over `cases` random `(a, u, dt)` triples.
pub fn activation_error(plant: &Plant, cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let m = &plant.muscles[rng.random_range(0..12)];
        let a0: f64 = rng.random_range(0.0..=1.0);
        let u: f64 = rng.random_range(0.0..=1.0);
        let dt: f64 = 10f64.powf(rng.random_range(-5.0..0.0));
        let tau = if u > a0 { m.tau_act } else { m.tau_deact };
        // a(t) = u - (u - a0) e^{-t / tau}
        let exact = u - (u - a0) * (-dt / tau).exp();
        worst = worst.max((activation_step(a0, u, dt, m) - exact).abs());
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// Residual rotation after 1 s without excitation from 20 degrees.
    pub settle_deg: f64,
    pub random_steps: usize,
    pub random_failures: usize,
    pub energy_monotone: bool,
    /// Final gaze-direction difference between `substeps` and `2 * substeps`
    /// after 100 steps of a varying excitation pattern.
    pub substep_drift_deg: f64,
    /// Largest full-orientation difference along the same trajectory.
    pub max_orientation_drift_deg: f64,
}

pub fn plant_stability(plant: &Plant, random_steps: usize, seed: u64) -> StabilityReport {
    let zero = [0.0; 12];

    let q = fick_to_quat(FickAngles::new(20f64.to_radians(), 0.0, 0.0));
    let mut s = plant.state_at(q, q);
    let mut settle_deg = f64::INFINITY;
    if let Some(end) = run_steps(plant, &mut s, 100, |_| zero) {
        settle_deg = end.right.q.angle().max(end.left.q.angle()).to_degrees();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = plant.reset();
    let mut random_failures = 0;
    for _ in 0..random_steps {
        let exc: [f64; 12] = std::array::from_fn(|_| rng.random_range(0.0..=1.0));
        match plant.step(&s, &exc, 0.01) {
            Ok(next) if next.right.q.is_finite() && next.left.q.is_finite() && next.right.omega.is_finite() && next.left.omega.is_finite() => s = next,
            _ => {
                random_failures += 1;
                s = plant.reset();
            }
        }
    }

    let q = fick_to_quat(FickAngles::new(0.3, -0.2, 0.1));
    let mut s = plant.state_at(q, q.conjugate());
    s.right.omega = crate::vecmath::Vec3::new(5.0, -3.0, 2.0);
    let mut prev = [plant.mechanical_energy(&s.right), plant.mechanical_energy(&s.left)];
    let mut energy_monotone = true;
    for _ in 0..100 {
        match plant.step(&s, &zero, 0.01) {
            Ok(next) => s = next,
            Err(_) => {
                energy_monotone = false;
                break;
            }
        }
        for (eye, p) in prev.iter_mut().enumerate() {
            let e = plant.mechanical_energy(s.eye(eye));
            energy_monotone &= e <= *p * (1.0 + 1e-12) + 1e-18;
            *p = e;
        }
    }

    let mut fine = plant.clone();
    fine.params.substeps = plant.params.substeps * 2;
    let pattern = |k: usize| -> [f64; 12] {
        std::array::from_fn(|i| 0.5 + 0.5 * ((k as f64) * 0.07 + i as f64 * 1.3).sin())
    };
    let mut a = plant.reset();
    let mut b = fine.reset();
    let mut substep_drift_deg = 0.0f64;
    let mut max_orientation_drift_deg = 0.0f64;
    for k in 0..100 {
        let exc = pattern(k);
        match (plant.step(&a, &exc, 0.01), fine.step(&b, &exc, 0.01)) {
            (Ok(na), Ok(nb)) => {
                a = na;
                b = nb;
            }
            _ => {
                substep_drift_deg = f64::INFINITY;
                max_orientation_drift_deg = f64::INFINITY;
                break;
            }
        }
        for eye in 0..2 {
            let rel = a.eye(eye).q.conjugate().mul(b.eye(eye).q);
            max_orientation_drift_deg = max_orientation_drift_deg.max(rel.angle().to_degrees());
        }
    }
    if substep_drift_deg.is_finite() {
        for eye in 0..2 {
            let (ga, gb) = (a.eye(eye).gaze(), b.eye(eye).gaze());
            let angle = ga.cross(gb).norm().atan2(ga.dot(gb)).to_degrees();
            substep_drift_deg = substep_drift_deg.max(angle);
        }
    }

    StabilityReport {
        settle_deg,
        random_steps,
        random_failures,
        energy_monotone,
        substep_drift_deg,
        max_orientation_drift_deg,
    }
}

fn run_steps(
    plant: &Plant,
    s: &mut PlantState,
    n: usize,
    exc: impl Fn(usize) -> [f64; 12],
) -> Option<PlantState> {
    for k in 0..n {
        *s = plant.step(s, &exc(k), 0.01).ok()?;
    }
    Some(s.clone())
}

/// Worst relative error of analytic against central-difference gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientReport {
    pub actor: f64,
    pub critic_params: f64,
    pub critic_action: f64,
}

/// `coords_per_net` parameters are sampled per draw; all action inputs are checked.
pub fn gradient_errors(draws: usize, coords_per_net: usize, seed: u64) -> GradientReport {
    let mut report = GradientReport {
        actor: 0.0,
        critic_params: 0.0,
        critic_action: 0.0,
    };
    for d in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(d as u64));
        let actor = Actor::new(&[64, 64, 64], &mut rng);
        let critic = Critic::new(&[64, 64, 64], &mut rng);
        let n = 4;
        let states = Array2::from_shape_fn((n, OBS_DIM), |(_, j)| {
            if j >= 15 {
                rng.random_range(0.0..1.0)
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        let actions = Array2::from_shape_fn((n, ACTION_DIM), |_| rng.random_range(0.0..1.0));
        let weights = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));

        // actor: mean Q through the critic, as in the policy update
        let (a, cache) = actor.forward(states.view()).expect("shapes");
        let (_, dq) = critic.value_and_action_grad(states.view(), a.view()).expect("shapes");
        let g = actor.backward(&cache, (dq / n as f64).view()).expect("shapes");
        let flat = actor.net.flatten();
        let coords = sample_coords(&mut rng, flat.len(), coords_per_net);
        report.actor = report.actor.max(gradient_check(
            |p| {
                let mut x = actor.clone();
                x.net.set_flat(p).expect("length");
                let (act, _) = x.forward(states.view()).expect("shapes");
                critic.q(states.view(), act.view()).expect("shapes").mean().unwrap_or(0.0)
            },
            &flat,
            &g.flatten(),
            1e-5,
            &coords,
        ));

        let (_, cache) = critic.forward(states.view(), actions.view()).expect("shapes");
        let (g, _) = critic.backward(&cache, &weights).expect("shapes");
        let flat = critic.net.flatten();
        let coords = sample_coords(&mut rng, flat.len(), coords_per_net);
        report.critic_params = report.critic_params.max(gradient_check(
            |p| {
                let mut c = critic.clone();
                c.net.set_flat(p).expect("length");
                (c.q(states.view(), actions.view()).expect("shapes") * &weights).sum()
            },
            &flat,
            &g.flatten(),
            1e-5,
            &coords,
        ));

        let (_, dqda) = critic.value_and_action_grad(states.view(), actions.view()).expect("shapes");
        let flat_a: Vec<f64> = actions.iter().copied().collect();
        let all: Vec<usize> = (0..flat_a.len()).collect();
        report.critic_action = report.critic_action.max(gradient_check(
            |p| {
                let a2 = Array2::from_shape_vec(actions.dim(), p.to_vec()).expect("length");
                critic.q(states.view(), a2.view()).expect("shapes").sum()
            },
            &flat_a,
            dqda.as_slice().expect("standard layout"),
            1e-5,
            &all,
        ));
    }
    report
}

fn sample_coords(rng: &mut ChaCha8Rng, len: usize, n: usize) -> Vec<usize> {
    if n >= len {
        (0..len).collect()
    } else {
        rand::seq::index::sample(rng, len, n).into_vec()
    }
}

/// `Q(s, a) = -|a - a*|^2`, independent of the state.
pub struct QuadraticBowl(pub Array1<f64>);

impl ActionValue for QuadraticBowl {
    fn value_and_action_grad(
        &self,
        _states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>), NetError> {
        let diff = &actions - &self.0;
        let q = diff.mapv(|d| -d * d).sum_axis(ndarray::Axis(1));
        Ok((q, diff * -2.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdpgSanity {
    /// Max-norm distance of the actor output from the bowl optimum.
    pub bowl_error: f64,
    pub bowl_updates: usize,
    /// Critic loss after repeated updates on one transition.
    pub regression_loss: f64,
    pub regression_updates: usize,
}

pub fn ddpg_sanity(seed: u64) -> DdpgSanity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // The optimum must respect the yoking: right LR/MR follow left MR/LR.
    let left: [f64; 6] = std::array::from_fn(|i| 0.2 + 0.1 * i as f64);
    let mut optimum = Array1::zeros(ACTION_DIM);
    for i in 0..6 {
        optimum[6 + i] = left[i];
        optimum[i] = left[i];
    }
    optimum[0] = left[1];
    optimum[1] = left[0];
    let bowl = QuadraticBowl(optimum.clone());
    let mut actor = Actor::new(&[64, 64, 64], &mut rng);
    let mut opt = Adam::for_params(&actor.net.param_slices(), 1e-2);
    let s = Array2::from_shape_fn((1, OBS_DIM), |_| rng.random_range(-1.0..1.0));
    let bowl_updates = 500;
    for _ in 0..bowl_updates {
        if actor_update_with(&mut actor, &mut opt, &bowl, s.view()).is_err() {
            break;
        }
    }
    let bowl_error = match actor.forward(s.view()) {
        Ok((a, _)) => (&a.row(0) - &optimum).iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Err(_) => f64::INFINITY,
    };

    let mut agent = Agent::new(&[64, 64, 64], &[64, 64, 64], 1e-3, 1e-3, 0.0, 0.001, &mut rng);
    let batch = Batch {
        states: Array2::from_shape_fn((1, OBS_DIM), |_| rng.random_range(-1.0..1.0)),
        actions: Array2::from_shape_fn((1, ACTION_DIM), |_| rng.random_range(0.0..1.0)),
        rewards: Array1::from_elem(1, -1.5),
        next_states: Array2::from_shape_fn((1, OBS_DIM), |_| rng.random_range(-1.0..1.0)),
        dones: Array1::zeros(1),
    };
    let regression_updates = 3000;
    let mut regression_loss = f64::INFINITY;
    for _ in 0..regression_updates {
        match agent.critic_update(&batch) {
            Ok(l) => regression_loss = l,
            Err(_) => break,
        }
    }
    // the returned loss is pre-step; take one more measurement after the last step
    if let Ok(y) = agent.td_targets(&batch) {
        if let Ok(q) = agent.critic.q(batch.states.view(), batch.actions.view()) {
            regression_loss = (&q - &y).mapv(|d| d * d).mean().unwrap_or(f64::INFINITY);
        }
    }

    DdpgSanity {
        bowl_error,
        bowl_updates,
        regression_loss,
        regression_updates,
    }
}

/// Every suite with its pass threshold.
pub fn run_all(plant: &Plant, seed: u64) -> Vec<CheckResult> {
    let mut out = vec![dimensions(plant, seed)];

    let cases = reward_cases(plant);
    let worst = cases.iter().fold(0.0f64, |m, (g, e)| m.max((g - e).abs()));
    out.push(CheckResult::new(
        "reward cases",
        worst < 1e-9,
        format!("{} cases, max error {worst:.3e}", cases.len()),
    ));

    let signs = action_signs(plant);
    let ok = signs.iter().filter(|s| s.passed).count();
    let failed: Vec<&str> = signs.iter().filter(|s| !s.passed).map(|s| s.muscle.as_str()).collect();
    out.push(CheckResult::new(
        "action signs",
        ok == 12,
        if failed.is_empty() {
            format!("{ok}/12")
        } else {
            format!("{ok}/12, failing {}", failed.join(" "))
        },
    ));

    let err = activation_error(plant, 1000, seed);
    out.push(CheckResult::new("activation dynamics", err < 1e-9, format!("max error {err:.3e}")));

    let st = plant_stability(plant, 100_000, seed);
    out.push(CheckResult::new(
        "plant stability",
        st.settle_deg < 1.0 && st.random_failures == 0 && st.energy_monotone && st.substep_drift_deg < 0.1,
        format!(
            "settle {:.4} deg, {} failures in {} steps, energy monotone {}, substep drift {:.4} deg (trajectory max {:.4} deg)",
            st.settle_deg,
            st.random_failures,
            st.random_steps,
            st.energy_monotone,
            st.substep_drift_deg,
            st.max_orientation_drift_deg
        ),
    ));

    let g = gradient_errors(5, 300, seed);
    let worst = g.actor.max(g.critic_params).max(g.critic_action);
    out.push(CheckResult::new(
        "gradients",
        worst < 1e-4,
        format!(
            "actor {:.2e}, critic params {:.2e}, critic action {:.2e}",
            g.actor, g.critic_params, g.critic_action
        ),
    ));

    let d = ddpg_sanity(seed);
    out.push(CheckResult::new(
        "ddpg sanity",
        d.bowl_error < 1e-2 && d.regression_loss < 1e-6,
        format!("bowl error {:.2e}, regression loss {:.2e}", d.bowl_error, d.regression_loss),
    ));
    out
}
