//! Small 3D kernel: vectors, unit quaternions, Fick angles and gaze-plane
//! intersection.
//!
//! World frame: +x anterior (out of the face), +y superior, +z toward the
//! subject's right.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::GeometryError;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. Returns `None` for the zero vector.
    pub fn try_normalize(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Reflection through the sagittal plane (z -> -z).
    pub fn mirror_z(self) -> Vec3 {
        Vec3::new(self.x, self.y, -self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Symmetric-or-not 3x3 matrix, row major. Only what the plant solver needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub fn diagonal(d: f64) -> Mat3 {
        Mat3([[d, 0.0, 0.0], [0.0, d, 0.0], [0.0, 0.0, d]])
    }

    pub fn zero() -> Mat3 {
        Mat3([[0.0; 3]; 3])
    }

    /// `a * b^T`
    pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
        let a = a.to_array();
        let b = b.to_array();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i] * b[j];
            }
        }
        Mat3(m)
    }

    pub fn add_scaled(&mut self, other: &Mat3, s: f64) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += s * other.0[i][j];
            }
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Solves `self * x = rhs` by Cramer's rule; `None` when singular.
    pub fn solve(&self, rhs: Vec3) -> Option<Vec3> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let cols = |c: usize| -> Mat3 {
            let mut m = self.0;
            let r = rhs.to_array();
            for (i, row) in m.iter_mut().enumerate() {
                row[c] = r[i];
            }
            Mat3(m)
        };
        Some(Vec3::new(
            cols(0).determinant() / det,
            cols(1).determinant() / det,
            cols(2).determinant() / det,
        ))
    }
}

/// Unit quaternion `w + xi + yj + zk` mapping eye-frame vectors to skull frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitQuat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for UnitQuat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a quaternion from raw components and normalises it.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(a) = axis.try_normalize() else {
            return Self::IDENTITY;
        };
        let (s, c) = (0.5 * angle).sin_cos();
        Self {
            w: c,
            x: a.x * s,
            y: a.y * s,
            z: a.z * s,
        }
    }

    /// Exponential map of a rotation vector (axis * angle).
    pub fn from_rotation_vector(rv: Vec3) -> Self {
        let theta = rv.norm();
        if theta < 1e-12 {
            // second-order series keeps the map smooth near zero
            let q = Self {
                w: 1.0 - theta * theta / 8.0,
                x: 0.5 * rv.x,
                y: 0.5 * rv.y,
                z: 0.5 * rv.z,
            };
            return q.normalized();
        }
        Self::from_axis_angle(rv, theta)
    }

    /// Logarithm map: rotation vector with angle in [0, pi].
    pub fn to_rotation_vector(self) -> Vec3 {
        // q and -q are the same rotation; pick w >= 0 for the short way round.
        let q = if self.w < 0.0 { self.conjugate_neg() } else { self };
        let v = Vec3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s < 1e-12 {
            return v * 2.0;
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    fn conjugate_neg(self) -> Self {
        Self {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn conjugate(self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        Self::new_normalize(self.w, self.x, self.y, self.z)
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Hamilton product `self * o` (apply `o` first, then `self`).
    pub fn mul(self, o: UnitQuat) -> UnitQuat {
        UnitQuat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    /// Rotation angle in [0, pi].
    pub fn angle(self) -> f64 {
        self.to_rotation_vector().norm()
    }

    /// Rotation matrix, row major.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let UnitQuat { w, x, y, z } = self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }
}

/// Rotates `v` by `q`.
pub fn rotate_vector(q: UnitQuat, v: Vec3) -> Vec3 {
    // v' = v + 2w(u x v) + 2 u x (u x v)
    let u = Vec3::new(q.x, q.y, q.z);
    let t = u.cross(v) * 2.0;
    v + t * q.w + u.cross(t)
}

/// Advances `q` by a constant skull-frame angular velocity over `dt`, using
/// the exponential map. Exact for constant `omega`.
pub fn integrate_orientation(q: UnitQuat, omega: Vec3, dt: f64) -> UnitQuat {
    UnitQuat::from_rotation_vector(omega * dt).mul(q).normalized()
}

/// Fick angles: yaw about +y, then pitch about the rotated +z, then torsion
/// about the gaze axis. Positive yaw turns gaze toward -z, positive pitch
/// elevates gaze, positive torsion is right-handed about the line of sight.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FickAngles {
    pub yaw_rad: f64,
    pub pitch_rad: f64,
    pub torsion_rad: f64,
}

/// Margin from +-pi/2 pitch inside which Fick angles are rejected.
pub const GIMBAL_MARGIN: f64 = 0.01;

impl FickAngles {
    pub fn new(yaw_rad: f64, pitch_rad: f64, torsion_rad: f64) -> Self {
        Self {
            yaw_rad,
            pitch_rad,
            torsion_rad,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.yaw_rad, self.pitch_rad, self.torsion_rad]
    }
}

/// Extracts Fick angles. Fails within [`GIMBAL_MARGIN`] of vertical gaze.
pub fn quat_to_fick(q: UnitQuat) -> Result<FickAngles, GeometryError> {
    let (angles, cos_pitch) = fick_unchecked(q);
    if cos_pitch < GIMBAL_MARGIN.sin() {
        return Err(GeometryError::GimbalLock {
            pitch_rad: angles.pitch_rad,
        });
    }
    Ok(angles)
}

/// Fick angles without the gimbal check; used for observations, where a
/// near-vertical gaze still needs some finite encoding.
pub fn quat_to_fick_lossy(q: UnitQuat) -> FickAngles {
    fick_unchecked(q).0
}

fn fick_unchecked(q: UnitQuat) -> (FickAngles, f64) {
    let m = q.to_matrix();
    // gaze = first column = (cy cp, sp, -sy cp)
    let sp = m[1][0].clamp(-1.0, 1.0);
    let cp = (m[0][0] * m[0][0] + m[2][0] * m[2][0]).sqrt();
    let pitch = sp.atan2(cp);
    let yaw = (-m[2][0]).atan2(m[0][0]);
    let torsion = (-m[1][2]).atan2(m[1][1]);
    (FickAngles::new(yaw, pitch, torsion), cp)
}

pub fn fick_to_quat(f: FickAngles) -> UnitQuat {
    let yaw = UnitQuat::from_axis_angle(Vec3::Y, f.yaw_rad);
    let pitch = UnitQuat::from_axis_angle(Vec3::Z, f.pitch_rad);
    let torsion = UnitQuat::from_axis_angle(Vec3::X, f.torsion_rad);
    yaw.mul(pitch).mul(torsion).normalized()
}

/// Intersection of the ray `origin + t*dir` (t > 0) with the plane `x = plane_x`.
pub fn ray_plane_x(origin: Vec3, dir: Vec3, plane_x: f64) -> Result<Vec3, GeometryError> {
    if !(dir.x > 1e-6) {
        return Err(GeometryError::GazeParallel { dir_x: dir.x });
    }
    let t = (plane_x - origin.x) / dir.x;
    Ok(Vec3::new(plane_x, origin.y + t * dir.y, origin.z + t * dir.z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_vec(a: Vec3, b: Vec3, tol: f64) {
        assert!(a.distance(b) <= tol, "{a:?} != {b:?}");
    }

    #[test]
    fn rotate_identity() {
        assert_vec(rotate_vector(UnitQuat::IDENTITY, Vec3::X), Vec3::X, 0.0);
    }

    #[test]
    fn rotate_quarter_turn_about_y() {
        let q = UnitQuat::from_axis_angle(Vec3::Y, FRAC_PI_2);
        assert_vec(rotate_vector(q, Vec3::X), Vec3::new(0.0, 0.0, -1.0), 1e-12);
    }

    #[test]
    fn rotate_half_turn_about_z() {
        let q = UnitQuat::from_axis_angle(Vec3::Z, PI);
        assert_vec(
            rotate_vector(q, Vec3::new(1.0, 2.0, 0.0)),
            Vec3::new(-1.0, -2.0, 0.0),
            1e-12,
        );
    }

    #[test]
    fn rotate_matches_matrix() {
        let q = UnitQuat::new_normalize(0.3, -0.5, 0.7, 0.2);
        let m = q.to_matrix();
        let v = Vec3::new(0.4, -1.2, 2.5);
        let mv = Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        );
        assert_vec(rotate_vector(q, v), mv, 1e-12);
    }

    #[test]
    fn integrate_zero_velocity_is_noop() {
        let q = UnitQuat::new_normalize(0.9, 0.1, -0.2, 0.3);
        let out = integrate_orientation(q, Vec3::ZERO, 0.01);
        assert_abs_diff_eq!(out.w, q.w, epsilon = 1e-15);
        assert_abs_diff_eq!(out.x, q.x, epsilon = 1e-15);
        assert_abs_diff_eq!(out.y, q.y, epsilon = 1e-15);
        assert_abs_diff_eq!(out.z, q.z, epsilon = 1e-15);
    }

    #[test]
    fn integrate_half_second_at_pi_is_quarter_yaw() {
        let q = integrate_orientation(UnitQuat::IDENTITY, Vec3::new(0.0, PI, 0.0), 0.5);
        let f = quat_to_fick(q).unwrap();
        assert_abs_diff_eq!(f.yaw_rad, FRAC_PI_2, epsilon = 1e-6);
        assert_abs_diff_eq!(f.pitch_rad, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_half_steps_equal_one_step() {
        let q0 = UnitQuat::new_normalize(0.8, 0.1, 0.4, -0.2);
        let w = Vec3::new(3.0, -1.5, 7.0);
        let full = integrate_orientation(q0, w, 0.02);
        let half = integrate_orientation(integrate_orientation(q0, w, 0.01), w, 0.01);
        assert_abs_diff_eq!(full.w, half.w, epsilon = 1e-9);
        assert_abs_diff_eq!(full.x, half.x, epsilon = 1e-9);
        assert_abs_diff_eq!(full.y, half.y, epsilon = 1e-9);
        assert_abs_diff_eq!(full.z, half.z, epsilon = 1e-9);
    }

    #[test]
    fn fick_identity_and_single_axis() {
        let f = quat_to_fick(UnitQuat::IDENTITY).unwrap();
        assert_eq!(f.to_array(), [0.0, 0.0, 0.0]);
        let ten = 10f64.to_radians();
        let f = quat_to_fick(UnitQuat::from_axis_angle(Vec3::Y, ten)).unwrap();
        assert_abs_diff_eq!(f.yaw_rad, ten, epsilon = 1e-12);
        assert_abs_diff_eq!(f.pitch_rad, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.torsion_rad, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fick_rejects_vertical_gaze() {
        let q = UnitQuat::from_axis_angle(Vec3::Z, FRAC_PI_2);
        assert!(matches!(quat_to_fick(q), Err(GeometryError::GimbalLock { .. })));
    }

    #[test]
    fn ray_plane_cases() {
        let p = ray_plane_x(Vec3::new(0.0, 0.0, 0.031), Vec3::X, 1.0).unwrap();
        assert_eq!(p, Vec3::new(1.0, 0.0, 0.031));
        let dir = Vec3::new(1.0, 0.1, 0.0).try_normalize().unwrap();
        let p = ray_plane_x(Vec3::ZERO, dir, 1.0).unwrap();
        assert_vec(p, Vec3::new(1.0, 0.1, 0.0), 1e-12);
        assert!(matches!(
            ray_plane_x(Vec3::ZERO, Vec3::Y, 1.0),
            Err(GeometryError::GazeParallel { .. })
        ));
    }

    #[test]
    fn mat3_solve() {
        let m = Mat3([[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]]);
        let x = Vec3::new(0.3, -1.0, 2.0);
        let b = m.mul_vec(x);
        assert_vec(m.solve(b).unwrap(), x, 1e-12);
        assert!(Mat3::zero().solve(b).is_none());
    }

    fn quat_strategy() -> impl Strategy<Value = UnitQuat> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| UnitQuat::new_normalize(w, x, y, z))
    }

    fn vec_strategy() -> impl Strategy<Value = Vec3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn rotation_is_isometry(q in quat_strategy(), a in vec_strategy(), b in vec_strategy()) {
            let ra = rotate_vector(q, a);
            let rb = rotate_vector(q, b);
            prop_assert!((ra.norm() - a.norm()).abs() <= 1e-9);
            prop_assert!((ra.dot(rb) - a.dot(b)).abs() <= 1e-9);
        }

        #[test]
        fn integration_keeps_unit_norm(q in quat_strategy(), w in vec_strategy(), dt in 1e-4..0.1f64) {
            let out = integrate_orientation(q, w * 20.0, dt);
            prop_assert!((out.norm() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn fick_round_trip(yaw in -3.1..3.1f64, pitch in -1.55..1.55f64, tor in -3.1..3.1f64) {
            let q = fick_to_quat(FickAngles::new(yaw, pitch, tor));
            let f = quat_to_fick(q).unwrap();
            prop_assert!((f.yaw_rad - yaw).abs() <= 1e-9);
            prop_assert!((f.pitch_rad - pitch).abs() <= 1e-9);
            prop_assert!((f.torsion_rad - tor).abs() <= 1e-9);
            let back = fick_to_quat(f);
            // q and -q are the same rotation
            let d = (back.w * q.w + back.x * q.x + back.y * q.y + back.z * q.z).abs();
            prop_assert!((d - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn ray_hits_plane_on_ray(o in vec_strategy(), d in vec_strategy(), px in -3.0..3.0f64) {
            prop_assume!(d.x > 1e-3 && (px - o.x).abs() > 1e-2);
            let d = d.try_normalize().unwrap();
            let p = ray_plane_x(o, d, px).unwrap();
            prop_assert_eq!(p.x, px);
            let off = p - o;
            prop_assert!(off.cross(d).norm() <= 1e-9 * off.norm());
        }

        #[test]
        fn rotation_vector_round_trip(x in -1.7..1.7f64, y in -1.7..1.7f64, z in -1.7..1.7f64) {
            let rv = Vec3::new(x, y, z);
            let back = UnitQuat::from_rotation_vector(rv).to_rotation_vector();
            prop_assert!(back.distance(rv) <= 1e-9);
        }
    }
}
