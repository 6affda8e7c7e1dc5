//! Rotation algebra on the Bloch sphere.
//!
//! Rotations are stored as unit quaternions and act on classical
//! magnetization vectors. All rotations are right-handed and active: a
//! rotation by `+angle` about `+z` takes `x` towards `y`, which is also the
//! sense of free precession at a positive offset frequency.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|axis| = 1` accepted by [`Rotation::from_axis_angle`].
pub const AXIS_NORM_TOL: f64 = 1e-9;

/// Below this value of `sin(angle/2)` the rotation axis is treated as undefined.
pub const DEGENERATE_SIN_HALF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
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

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(self.y * other.z - self.z * other.y, self.z * other.x - self.x * other.z, self.x * other.y - self.y * other.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Angle between two vectors in `[0, pi]`, stable for nearly parallel inputs.
    pub fn angle_to(self, other: Vec3) -> f64 {
        self.cross(other).norm().atan2(self.dot(other))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
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
        self.scale(s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Axis-angle form of a rotation with the angle folded into `[0, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
    /// Set when the rotation is the identity and `axis` is the default `x`.
    pub degenerate: bool,
}

/// A unit quaternion `(w, x, y, z)` with `w = cos(angle/2)` and
/// `(x, y, z) = axis * sin(angle/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for Rotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Builds a rotation by `angle` radians about the unit vector `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let norm = axis.norm();
        if !axis.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::Input(format!("rotation axis {axis} is not a unit vector (|axis| = {norm})")));
        }
        if !angle.is_finite() {
            return Err(Error::Input(format!("rotation angle {angle} is not finite")));
        }
        Ok(Self::about_unit(axis.scale(1.0 / norm), angle))
    }

    /// Unchecked constructor for callers that already hold a unit axis.
    pub(crate) fn about_unit(axis: Vec3, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Rotation { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s }
    }

    /// Rotation about `+z`.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Rotation { w: c, x: 0.0, y: 0.0, z: s }
    }

    /// Rotation by `|field| * duration` about the direction of `field`; the
    /// zero field gives the identity.
    pub fn from_rotation_vector(field: Vec3, duration: f64) -> Self {
        let rate = field.norm();
        if rate == 0.0 {
            return Self::IDENTITY;
        }
        Self::about_unit(field.scale(1.0 / rate), rate * duration)
    }

    /// Builds a rotation from raw quaternion components, normalizing them.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Input("quaternion has zero or non-finite norm".into()));
        }
        Ok(Rotation { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    pub fn quaternion(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn scalar(&self) -> f64 {
        self.w
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Rotation that applies `self` first and `second` afterwards.
    pub fn then(&self, second: &Rotation) -> Rotation {
        second.mul_raw(self).renormalized()
    }

    /// Hamilton product `self * rhs` (acts as `rhs` first).
    fn mul_raw(&self, rhs: &Rotation) -> Rotation {
        let (a, b) = (self, rhs);
        Rotation {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }

    fn renormalized(self) -> Rotation {
        let n = (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        Rotation { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn inverse(&self) -> Rotation {
        Rotation { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Rotates `v`.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        // v' = v + 2w (q x v) + 2 q x (q x v)
        let q = self.vector();
        let t = q.cross(v).scale(2.0);
        v + t.scale(self.w) + q.cross(t)
    }

    /// Rotation matrix, row-major.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Canonical axis-angle form with `angle` in `[0, pi]`.
    ///
    /// The quaternion double cover is resolved by flipping the sign of the
    /// whole quaternion when `w < 0`. The identity has no axis: it is reported
    /// as `x` with `degenerate` set.
    pub fn to_axis_angle(&self) -> AxisAngle {
        let (w, v) = if self.w < 0.0 { (-self.w, -self.vector()) } else { (self.w, self.vector()) };
        let s = v.norm();
        let angle = 2.0 * s.atan2(w);
        if s <= DEGENERATE_SIN_HALF {
            return AxisAngle { axis: Vec3::X, angle, degenerate: true };
        }
        AxisAngle { axis: v.scale(1.0 / s), angle, degenerate: false }
    }

    /// True when both quaternions describe the same SO(3) action within `tol`.
    pub fn approx_eq(&self, other: &Rotation, tol: f64) -> bool {
        let a = self.quaternion();
        let b = other.quaternion();
        let plus = a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let minus = a.iter().zip(b.iter()).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max);
        plus.min(minus) <= tol
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.vector().norm().atan2(self.w.abs())
    }
}

/// Wraps an angle into `[0, pi]` as the magnitude of the equivalent rotation
/// about a fixed axis (the axis flips when the folded angle passes `pi`).
pub fn fold_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        2.0 * PI - a
    } else {
        a
    }
}
