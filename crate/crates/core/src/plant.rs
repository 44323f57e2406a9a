//! Two globes in a fixed skull, each a 3-DoF rotational rigid body driven by
//! six muscles and a passive orbital spring-damper.
//!
//! Each environment step is split into `substeps` semi-implicit Euler steps.
//! Velocity-dependent torques (force-velocity damping of every muscle plus
//! the passive damper) are linearised about the current velocity and solved
//! implicitly; everything else is explicit.

use crate::error::{GeometryError, PlantError};
use crate::muscle::{
    activation_step, binocular_muscles, default_right_muscles, fiber_force,
    fiber_force_velocity_slope, muscle_path, normalized_fiber, path_geometry, MuscleParams,
    MuscleState, DEFAULT_GLOBE_RADIUS,
};
use crate::vecmath::{integrate_orientation, rotate_vector, Mat3, UnitQuat, Vec3};

pub const DEFAULT_GLOBE_MASS: f64 = 0.0075;
pub const DEFAULT_K_P: f64 = 0.015;
pub const DEFAULT_SUBSTEPS: usize = 10;
pub const DEFAULT_IPD_HALF: f64 = 0.031;
/// Angular speed beyond which the plant is declared diverged (rad/s).
pub const OMEGA_LIMIT: f64 = 2000.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PlantParams {
    /// Isotropic moment of inertia of one globe (kg m^2).
    pub inertia: f64,
    /// Passive rotational stiffness (N m / rad).
    pub k_p: f64,
    /// Passive rotational damping (N m s / rad).
    pub c_p: f64,
    pub substeps: usize,
    /// Right then left eye centre.
    pub eye_centers: [Vec3; 2],
    pub globe_radius: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        let inertia = solid_sphere_inertia(DEFAULT_GLOBE_MASS, DEFAULT_GLOBE_RADIUS);
        Self {
            inertia,
            k_p: DEFAULT_K_P,
            c_p: critical_damping(DEFAULT_K_P, inertia),
            substeps: DEFAULT_SUBSTEPS,
            eye_centers: [
                Vec3::new(0.0, 0.0, DEFAULT_IPD_HALF),
                Vec3::new(0.0, 0.0, -DEFAULT_IPD_HALF),
            ],
            globe_radius: DEFAULT_GLOBE_RADIUS,
        }
    }
}

pub fn solid_sphere_inertia(mass: f64, radius: f64) -> f64 {
    0.4 * mass * radius * radius
}

pub fn critical_damping(k: f64, inertia: f64) -> f64 {
    2.0 * (k * inertia).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EyeState {
    pub q: UnitQuat,
    pub omega: Vec3,
    pub muscles: [MuscleState; 6],
}

impl EyeState {
    pub fn gaze(&self) -> Vec3 {
        rotate_vector(self.q, Vec3::X)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    pub right: EyeState,
    pub left: EyeState,
    pub eye_centers: [Vec3; 2],
}

impl PlantState {
    pub fn eye(&self, index: usize) -> &EyeState {
        if index == 0 {
            &self.right
        } else {
            &self.left
        }
    }

    fn eye_mut(&mut self, index: usize) -> &mut EyeState {
        if index == 0 {
            &mut self.right
        } else {
            &mut self.left
        }
    }

    /// Activations in action order: right LR..IO then left LR..IO.
    pub fn activations(&self) -> [f64; 12] {
        std::array::from_fn(|i| self.eye(i / 6).muscles[i % 6].activation)
    }
}

/// Passive orbital tissue: `-k_p * rotation_vector(q) - c_p * omega`.
pub fn passive_torque(q: UnitQuat, omega: Vec3, k_p: f64, c_p: f64) -> Vec3 {
    q.to_rotation_vector() * (-k_p) - omega * c_p
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plant {
    pub params: PlantParams,
    /// Right eye muscles then left eye muscles, each in `MuscleKind::ALL` order.
    pub muscles: [MuscleParams; 12],
}

impl Default for Plant {
    fn default() -> Self {
        Plant::new(PlantParams::default(), &default_right_muscles())
    }
}

impl Plant {
    /// Builds a plant; the left eye uses the mirror image of `right`.
    pub fn new(params: PlantParams, right: &[MuscleParams; 6]) -> Self {
        let mut muscles = binocular_muscles(right);
        for m in muscles.iter_mut() {
            m.globe_radius = params.globe_radius;
        }
        Plant { params, muscles }
    }

    fn eye_muscles(&self, eye: usize) -> &[MuscleParams] {
        &self.muscles[eye * 6..eye * 6 + 6]
    }

    /// Both eyes at primary position, at rest, fully deactivated.
    pub fn reset(&self) -> PlantState {
        self.state_at(UnitQuat::IDENTITY, UnitQuat::IDENTITY)
    }

    /// Resting state (zero velocity and activation) at given orientations.
    pub fn state_at(&self, q_right: UnitQuat, q_left: UnitQuat) -> PlantState {
        let c = self.params.eye_centers;
        let eye = |idx: usize, q: UnitQuat| EyeState {
            q,
            omega: Vec3::ZERO,
            muscles: std::array::from_fn(|m| {
                let p = &self.eye_muscles(idx)[m];
                let path = path_geometry(q, c[idx], p);
                MuscleState {
                    activation: 0.0,
                    fiber_length: path.length - p.l_slack,
                    fiber_velocity: 0.0,
                    last_force: 0.0,
                }
            }),
        };
        PlantState {
            right: eye(0, q_right),
            left: eye(1, q_left),
            eye_centers: c,
        }
    }

    /// `0.5 I |omega|^2 + 0.5 k_p theta^2` of one eye.
    pub fn mechanical_energy(&self, eye: &EyeState) -> f64 {
        let theta = eye.q.angle();
        0.5 * self.params.inertia * eye.omega.norm_squared() + 0.5 * self.params.k_p * theta * theta
    }

    /// Advances both eyes by `dt_env` seconds under constant excitations.
    pub fn step(
        &self,
        state: &PlantState,
        excitations: &[f64; 12],
        dt_env: f64,
    ) -> Result<PlantState, PlantError> {
        let n = self.params.substeps.max(1);
        let dt = dt_env / n as f64;
        let mut next = state.clone();
        for _ in 0..n {
            for eye in 0..2 {
                self.substep_eye(&mut next, eye, &excitations[eye * 6..eye * 6 + 6], dt)?;
            }
        }
        Ok(next)
    }

    fn substep_eye(
        &self,
        state: &mut PlantState,
        eye: usize,
        excitations: &[f64],
        dt: f64,
    ) -> Result<(), PlantError> {
        let center = state.eye_centers[eye];
        let params = &self.params;
        let muscles = self.eye_muscles(eye);
        let es = state.eye_mut(eye);

        for (ms, (p, &u)) in es.muscles.iter_mut().zip(muscles.iter().zip(excitations)) {
            ms.activation = activation_step(ms.activation, u, dt, p);
        }

        let mut torque = passive_torque(es.q, es.omega, params.k_p, params.c_p);
        let mut damping = Mat3::diagonal(params.c_p);
        for (ms, p) in es.muscles.iter().zip(muscles) {
            let path = muscle_path(es.q, center, p)?;
            let arm = path.moment_arm(center);
            let rate = -arm.dot(es.omega);
            let (l_norm, v_norm) = normalized_fiber(path.length, rate, p);
            let force = fiber_force(ms.activation, l_norm, v_norm, p);
            torque += arm * force;
            let slope = fiber_force_velocity_slope(ms.activation, l_norm, v_norm, p);
            damping.add_scaled(&Mat3::outer(arm, arm), slope);
        }

        // (I + dt D) w' = I w + dt (tau(w) + D w)
        let mut lhs = Mat3::diagonal(params.inertia);
        lhs.add_scaled(&damping, dt);
        let rhs = es.omega * params.inertia + (torque + damping.mul_vec(es.omega)) * dt;
        let omega = lhs
            .solve(rhs)
            .ok_or_else(|| PlantError::Diverged("singular velocity system".into()))?;
        if !omega.is_finite() || omega.norm() > OMEGA_LIMIT {
            return Err(PlantError::Diverged(format!(
                "eye {eye} angular velocity {:?}",
                omega.to_array()
            )));
        }
        let q = integrate_orientation(es.q, omega, dt);
        if !q.is_finite() {
            return Err(PlantError::Diverged(format!("eye {eye} orientation non-finite")));
        }
        es.q = q;
        es.omega = omega;

        for (ms, p) in es.muscles.iter_mut().zip(muscles) {
            let path = path_geometry(q, center, p);
            let arm = path.moment_arm(center);
            let rate = -arm.dot(omega);
            let (l_norm, v_norm) = normalized_fiber(path.length, rate, p);
            ms.fiber_length = path.length - p.l_slack;
            ms.fiber_velocity = rate;
            ms.last_force = fiber_force(ms.activation, l_norm, v_norm, p);
        }
        Ok(())
    }

    /// Checks that no muscle path penetrates the globe at the given orientation.
    pub fn check_paths(&self, q: UnitQuat, eye: usize) -> Result<(), GeometryError> {
        let center = self.params.eye_centers[eye];
        for p in self.eye_muscles(eye) {
            muscle_path(q, center, p)?;
        }
        Ok(())
    }
}
