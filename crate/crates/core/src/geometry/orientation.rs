use std::fmt;
use std::str::FromStr;

use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Vector3};
use crate::units::{self, Unit};

/// Rotation order for Euler angles. `ZXY` means the rotation matrix is
/// `Rz · Rx · Ry`, i.e. intrinsic rotations about Z, then X, then Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EulerOrder {
    #[default]
    XYZ,
    XZY,
    YXZ,
    YZX,
    ZXY,
    ZYX,
}

impl EulerOrder {
    pub const ALL: [EulerOrder; 6] = [
        EulerOrder::XYZ,
        EulerOrder::XZY,
        EulerOrder::YXZ,
        EulerOrder::YZX,
        EulerOrder::ZXY,
        EulerOrder::ZYX,
    ];

    fn axes(self) -> [usize; 3] {
        match self {
            EulerOrder::XYZ => [0, 1, 2],
            EulerOrder::XZY => [0, 2, 1],
            EulerOrder::YXZ => [1, 0, 2],
            EulerOrder::YZX => [1, 2, 0],
            EulerOrder::ZXY => [2, 0, 1],
            EulerOrder::ZYX => [2, 1, 0],
        }
    }
}

impl FromStr for EulerOrder {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "XYZ" => Ok(EulerOrder::XYZ),
            "XZY" => Ok(EulerOrder::XZY),
            "YXZ" => Ok(EulerOrder::YXZ),
            "YZX" => Ok(EulerOrder::YZX),
            "ZXY" => Ok(EulerOrder::ZXY),
            "ZYX" => Ok(EulerOrder::ZYX),
            _ => Err(GeometryError::InvalidEulerOrder(s.to_string())),
        }
    }
}

impl fmt::Display for EulerOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Quaternion orientation, serialized as `{x, y, z, w}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Orientation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    /// Unit-norm copy. A zero quaternion normalizes to the identity.
    pub fn normalized(&self) -> Orientation {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Orientation::IDENTITY;
        }
        Orientation::new(self.x / n, self.y / n, self.z / n, self.w / n)
    }

    pub fn conjugate(&self) -> Orientation {
        Orientation::new(-self.x, -self.y, -self.z, self.w)
    }

    pub fn inverse(&self) -> Orientation {
        self.normalized().conjugate()
    }

    pub fn dot(&self, other: &Orientation) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    /// Hamilton product `self ∘ other` (apply `other` first).
    pub fn mul(&self, o: &Orientation) -> Orientation {
        Orientation::new(
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
        )
    }

    /// Rotates a vector by this orientation.
    pub fn rotate(&self, v: Vector3) -> Vector3 {
        let q = self.normalized();
        let u = Vector3::new(q.x, q.y, q.z);
        let t = u.cross(&v) * 2.0;
        v + t * q.w + u.cross(&t)
    }

    /// Whether two quaternions describe the same rotation within `tol`.
    pub fn same_rotation(&self, other: &Orientation, tol: f64) -> bool {
        (self.normalized().dot(&other.normalized()).abs() - 1.0).abs() <= tol
    }

    pub fn from_axis_angle(axis: Vector3, angle: f64) -> Orientation {
        let n = axis.norm();
        if n == 0.0 {
            return Orientation::IDENTITY;
        }
        let a = axis / n;
        let (s, c) = (angle / 2.0).sin_cos();
        Orientation::new(a.x * s, a.y * s, a.z * s, c)
    }

    /// Axis (unit) and angle in radians in `[0, π]`. The identity yields the
    /// x axis and angle 0.
    pub fn to_axis_angle(&self) -> (Vector3, f64) {
        let mut q = self.normalized();
        if q.w < 0.0 {
            q = Orientation::new(-q.x, -q.y, -q.z, -q.w);
        }
        let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        if s < 1e-15 {
            return (Vector3::new(1.0, 0.0, 0.0), 0.0);
        }
        let angle = 2.0 * s.atan2(q.w);
        (Vector3::new(q.x / s, q.y / s, q.z / s), angle)
    }

    /// Exponential map of a rotation vector (axis × angle in radians).
    pub fn from_rotation_vector(v: Vector3) -> Orientation {
        let angle = v.norm();
        if angle == 0.0 {
            return Orientation::IDENTITY;
        }
        Orientation::from_axis_angle(v, angle)
    }

    /// Builds an orientation from Euler angles about x, y and z given in `unit`.
    pub fn from_euler(
        angles: Vector3,
        order: EulerOrder,
        unit: &Unit,
    ) -> Result<Orientation, GeometryError> {
        unit.require_base("angle")?;
        let rad = units::radian();
        let a = [
            unit.convert_to(angles.x, &rad)?,
            unit.convert_to(angles.y, &rad)?,
            unit.convert_to(angles.z, &rad)?,
        ];
        Ok(Self::from_euler_radians(a, order))
    }

    pub fn from_euler_radians(angles: [f64; 3], order: EulerOrder) -> Orientation {
        let basis = [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        order
            .axes()
            .iter()
            .fold(Orientation::IDENTITY, |acc, &axis| {
                acc.mul(&Orientation::from_axis_angle(basis[axis], angles[axis]))
            })
            .normalized()
    }

    /// Euler angles (x, y, z) in radians for the given order. At gimbal lock
    /// the last free angle is set to zero.
    pub fn to_euler(&self, order: EulerOrder) -> [f64; 3] {
        let m = self.rotation_matrix();
        let e = |r: usize, c: usize| m[(r - 1, c - 1)];
        let clamp = |v: f64| v.clamp(-1.0, 1.0);
        const LOCK: f64 = 0.999_999_9;
        let (x, y, z);
        match order {
            EulerOrder::XYZ => {
                y = clamp(e(1, 3)).asin();
                if e(1, 3).abs() < LOCK {
                    x = (-e(2, 3)).atan2(e(3, 3));
                    z = (-e(1, 2)).atan2(e(1, 1));
                } else {
                    x = e(3, 2).atan2(e(2, 2));
                    z = 0.0;
                }
            }
            EulerOrder::YXZ => {
                x = (-clamp(e(2, 3))).asin();
                if e(2, 3).abs() < LOCK {
                    y = e(1, 3).atan2(e(3, 3));
                    z = e(2, 1).atan2(e(2, 2));
                } else {
                    y = (-e(3, 1)).atan2(e(1, 1));
                    z = 0.0;
                }
            }
            EulerOrder::ZXY => {
                x = clamp(e(3, 2)).asin();
                if e(3, 2).abs() < LOCK {
                    y = (-e(3, 1)).atan2(e(3, 3));
                    z = (-e(1, 2)).atan2(e(2, 2));
                } else {
                    y = 0.0;
                    z = e(2, 1).atan2(e(1, 1));
                }
            }
            EulerOrder::ZYX => {
                y = (-clamp(e(3, 1))).asin();
                if e(3, 1).abs() < LOCK {
                    x = e(3, 2).atan2(e(3, 3));
                    z = e(2, 1).atan2(e(1, 1));
                } else {
                    x = 0.0;
                    z = (-e(1, 2)).atan2(e(2, 2));
                }
            }
            EulerOrder::YZX => {
                z = clamp(e(2, 1)).asin();
                if e(2, 1).abs() < LOCK {
                    x = (-e(2, 3)).atan2(e(2, 2));
                    y = (-e(3, 1)).atan2(e(1, 1));
                } else {
                    x = 0.0;
                    y = e(1, 3).atan2(e(3, 3));
                }
            }
            EulerOrder::XZY => {
                z = (-clamp(e(1, 2))).asin();
                if e(1, 2).abs() < LOCK {
                    x = e(3, 2).atan2(e(2, 2));
                    y = e(1, 3).atan2(e(1, 1));
                } else {
                    x = (-e(2, 3)).atan2(e(3, 3));
                    y = 0.0;
                }
            }
        }
        [x, y, z]
    }

    pub fn rotation_matrix(&self) -> na::Matrix3<f64> {
        na::UnitQuaternion::from(*self)
            .to_rotation_matrix()
            .into_inner()
    }
}

impl From<Orientation> for na::UnitQuaternion<f64> {
    fn from(o: Orientation) -> Self {
        let q = o.normalized();
        na::UnitQuaternion::new_unchecked(na::Quaternion::new(q.w, q.x, q.y, q.z))
    }
}

impl From<na::UnitQuaternion<f64>> for Orientation {
    fn from(q: na::UnitQuaternion<f64>) -> Self {
        Orientation::new(q.i, q.j, q.k, q.w)
    }
}
