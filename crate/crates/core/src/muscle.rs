//! Hill-type extraocular muscle with a rigid tendon and a straight-line path.
//!
//! Force is `f_max * (a * fL(l) * fV(v) + fPE(l))` with normalised fiber
//! length `l = (path - l_slack) / l_opt` and normalised velocity
//! `v = dl/dt / (v_max * l_opt)` (shortening negative).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::vecmath::{rotate_vector, UnitQuat, Vec3};

/// Paths closer than this fraction of the globe radius to the centre are
/// rejected as penetrating the globe.
pub const PENETRATION_FRACTION: f64 = 0.9;

const FL_WIDTH: f64 = 0.45;
const FV_CONCENTRIC_CURVATURE: f64 = 0.25;
const FV_ECCENTRIC_PLATEAU: f64 = 1.4;
const FPE_STRAIN_AT_ONE: f64 = 0.6;
const FPE_SHAPE: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MuscleKind {
    LR,
    MR,
    SR,
    IR,
    SO,
    IO,
}

impl MuscleKind {
    /// Order used by every 6- and 12-wide muscle vector.
    pub const ALL: [MuscleKind; 6] = [
        MuscleKind::LR,
        MuscleKind::MR,
        MuscleKind::SR,
        MuscleKind::IR,
        MuscleKind::SO,
        MuscleKind::IO,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MuscleKind::LR => "LR",
            MuscleKind::MR => "MR",
            MuscleKind::SR => "SR",
            MuscleKind::IR => "IR",
            MuscleKind::SO => "SO",
            MuscleKind::IO => "IO",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EyeSide {
    Right,
    Left,
}

impl EyeSide {
    pub fn suffix(self) -> &'static str {
        match self {
            EyeSide::Right => "r",
            EyeSide::Left => "l",
        }
    }

    /// Sign of +z for the temporal direction of this eye.
    pub fn temporal_sign(self) -> f64 {
        match self {
            EyeSide::Right => 1.0,
            EyeSide::Left => -1.0,
        }
    }
}

/// Geometry and Hill-curve constants of one muscle.
///
/// `origin` is the skull-fixed attachment relative to the eye centre;
/// `insertion_dir` is the eye-frame unit direction of the insertion on the
/// globe surface.
#[derive(Clone, Debug, PartialEq)]
pub struct MuscleParams {
    pub kind: MuscleKind,
    pub side: EyeSide,
    pub origin: Vec3,
    pub insertion_dir: Vec3,
    pub globe_radius: f64,
    pub f_max: f64,
    pub l_opt: f64,
    pub l_slack: f64,
    /// Maximum shortening velocity in optimal fiber lengths per second.
    pub v_max: f64,
    pub tau_act: f64,
    pub tau_deact: f64,
}

impl MuscleParams {
    pub fn name(&self) -> String {
        format!("{}_{}", self.kind.as_str(), self.side.suffix())
    }

    /// Path length at primary position when the fiber sits at optimal length.
    pub fn rest_length(&self) -> f64 {
        self.l_slack + self.l_opt
    }

    /// The same muscle on the other eye (reflection z -> -z).
    pub fn mirrored(&self, side: EyeSide) -> MuscleParams {
        MuscleParams {
            side,
            origin: self.origin.mirror_z(),
            insertion_dir: self.insertion_dir.mirror_z(),
            ..self.clone()
        }
    }
}

impl fmt::Display for MuscleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MuscleState {
    pub activation: f64,
    pub fiber_length: f64,
    pub fiber_velocity: f64,
    pub last_force: f64,
}

/// First-order excitation-to-activation lag, integrated exactly over `dt`.
pub fn activation_step(a: f64, u: f64, dt: f64, params: &MuscleParams) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let a = a.clamp(0.0, 1.0);
    let tau = if u > a { params.tau_act } else { params.tau_deact };
    (u + (a - u) * (-dt / tau).exp()).clamp(0.0, 1.0)
}

/// Active force-length curve, 1 at optimal length.
pub fn force_length(l_norm: f64) -> f64 {
    let d = l_norm - 1.0;
    (-d * d / FL_WIDTH).exp()
}

/// Force-velocity curve, 1 when isometric and 0 at maximum shortening.
pub fn force_velocity(v_norm: f64) -> f64 {
    if v_norm <= -1.0 {
        0.0
    } else if v_norm <= 0.0 {
        (1.0 + v_norm) / (1.0 - v_norm / FV_CONCENTRIC_CURVATURE)
    } else {
        1.0 + (FV_ECCENTRIC_PLATEAU - 1.0) * v_norm / (v_norm + FV_CONCENTRIC_CURVATURE)
    }
}

/// Slope of [`force_velocity`].
pub fn force_velocity_slope(v_norm: f64) -> f64 {
    let c = FV_CONCENTRIC_CURVATURE;
    if v_norm <= -1.0 {
        0.0
    } else if v_norm <= 0.0 {
        let den = 1.0 - v_norm / c;
        (den + (1.0 + v_norm) / c) / (den * den)
    } else {
        let den = v_norm + c;
        (FV_ECCENTRIC_PLATEAU - 1.0) * c / (den * den)
    }
}

/// Passive parallel-element curve, zero below optimal length.
pub fn passive_force_length(l_norm: f64) -> f64 {
    if l_norm <= 1.0 {
        0.0
    } else {
        ((FPE_SHAPE * (l_norm - 1.0) / FPE_STRAIN_AT_ONE).exp() - 1.0) / (FPE_SHAPE.exp() - 1.0)
    }
}

/// Tendon force in newtons.
pub fn fiber_force(a: f64, l_norm: f64, v_norm: f64, params: &MuscleParams) -> f64 {
    let active = a * force_length(l_norm) * force_velocity(v_norm);
    (params.f_max * (active + passive_force_length(l_norm))).max(0.0)
}

/// Derivative of [`fiber_force`] with respect to fiber velocity in m/s.
pub fn fiber_force_velocity_slope(a: f64, l_norm: f64, v_norm: f64, params: &MuscleParams) -> f64 {
    params.f_max * a * force_length(l_norm) * force_velocity_slope(v_norm)
        / (params.v_max * params.l_opt)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MusclePath {
    pub length: f64,
    /// Unit vector at the insertion pointing toward the origin.
    pub line_of_action: Vec3,
    pub insertion_world: Vec3,
    /// Closest approach of the straight segment to the globe centre.
    pub clearance: f64,
}

impl MusclePath {
    /// Torque per newton of tendon force about the eye centre.
    pub fn moment_arm(&self, eye_center: Vec3) -> Vec3 {
        (self.insertion_world - eye_center).cross(self.line_of_action)
    }
}

/// Straight-line geometry without the penetration check.
pub fn path_geometry(eye_q: UnitQuat, eye_center: Vec3, params: &MuscleParams) -> MusclePath {
    let rel_insertion = rotate_vector(eye_q, params.insertion_dir) * params.globe_radius;
    let insertion_world = eye_center + rel_insertion;
    let origin_world = eye_center + params.origin;
    let seg = origin_world - insertion_world;
    let length = seg.norm();
    let line_of_action = seg * (1.0 / length);
    // closest point of the segment to the centre
    let t = (-rel_insertion.dot(seg) / seg.norm_squared()).clamp(0.0, 1.0);
    let clearance = (rel_insertion + seg * t).norm();
    MusclePath {
        length,
        line_of_action,
        insertion_world,
        clearance,
    }
}

/// Muscle path, rejecting segments that cut into the globe.
pub fn muscle_path(
    eye_q: UnitQuat,
    eye_center: Vec3,
    params: &MuscleParams,
) -> Result<MusclePath, GeometryError> {
    let path = path_geometry(eye_q, eye_center, params);
    if !(path.clearance >= PENETRATION_FRACTION * params.globe_radius) {
        return Err(GeometryError::PenetratingPath {
            muscle: params.name(),
            clearance: path.clearance,
        });
    }
    Ok(path)
}

/// Torque on the globe from a tendon force `force` (N).
pub fn muscle_torque(eye_q: UnitQuat, eye_center: Vec3, force: f64, params: &MuscleParams) -> Vec3 {
    let path = path_geometry(eye_q, eye_center, params);
    path.moment_arm(eye_center) * force
}

/// Normalised fiber length and velocity for a given path state.
pub fn normalized_fiber(path_length: f64, path_rate: f64, params: &MuscleParams) -> (f64, f64) {
    let l_norm = (path_length - params.l_slack) / params.l_opt;
    let v_norm = path_rate / (params.v_max * params.l_opt);
    (l_norm, v_norm)
}

pub const DEFAULT_GLOBE_RADIUS: f64 = 0.012;
pub const DEFAULT_F_MAX: f64 = 1.0;
pub const DEFAULT_V_MAX: f64 = 10.0;
pub const DEFAULT_TAU_ACT: f64 = 0.010;
pub const DEFAULT_TAU_DEACT: f64 = 0.040;
pub const DEFAULT_L_SLACK: f64 = 0.006;

/// Right-eye default geometry: (kind, origin relative to eye centre,
/// insertion direction, optimal fiber length). Origins sit far enough from
/// the globe that straight paths clear it over +-45 degrees of gaze.
const DEFAULT_GEOMETRY: [(MuscleKind, [f64; 3], [f64; 3], f64); 6] = [
    (MuscleKind::LR, [-0.032, 0.0, 0.030], [0.0, 0.0, 1.0], 0.030715119501371638),
    (MuscleKind::MR, [-0.032, 0.0, -0.030], [0.0, 0.0, -1.0], 0.030715119501371638),
    (MuscleKind::SR, [-0.031, 0.030, -0.010], [0.0, 1.0, 0.0], 0.031215588131856792),
    (MuscleKind::IR, [-0.031, -0.030, -0.010], [0.0, -1.0, 0.0], 0.031215588131856792),
    (
        MuscleKind::SO,
        [0.006, 0.036, -0.014],
        [-0.2995062217656057, 0.9284692874733778, 0.21963789596144417],
        0.025412255006609985,
    ),
    (
        MuscleKind::IO,
        [0.005, -0.036, -0.012],
        [-0.3107154693175362, -0.9221233282972042, 0.23053083207430106],
        0.024264900137068328,
    ),
];

/// Default right-eye muscle set in [`MuscleKind::ALL`] order.
pub fn default_right_muscles() -> [MuscleParams; 6] {
    DEFAULT_GEOMETRY.map(|(kind, origin, dir, l_opt)| MuscleParams {
        kind,
        side: EyeSide::Right,
        origin: Vec3::from_array(origin),
        insertion_dir: Vec3::from_array(dir),
        globe_radius: DEFAULT_GLOBE_RADIUS,
        f_max: DEFAULT_F_MAX,
        l_opt,
        l_slack: DEFAULT_L_SLACK,
        v_max: DEFAULT_V_MAX,
        tau_act: DEFAULT_TAU_ACT,
        tau_deact: DEFAULT_TAU_DEACT,
    })
}

/// All twelve muscles: right eye then the mirrored left eye.
pub fn binocular_muscles(right: &[MuscleParams; 6]) -> [MuscleParams; 12] {
    std::array::from_fn(|i| {
        if i < 6 {
            right[i].clone()
        } else {
            right[i - 6].mirrored(EyeSide::Left)
        }
    })
}
