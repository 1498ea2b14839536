//! Geometric primitives: vectors, unit quaternions, poses, rigid transforms
//! and pinhole intrinsics.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("rotation matrix is not orthonormal with det +1 (deviation {0:e})")]
    NotRotation(f64),
    #[error("quaternion has zero or non-finite norm")]
    DegenerateQuaternion,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

/// A point or direction in 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zeros() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Manhattan norm.
    #[inline]
    pub fn norm_l1(self) -> T {
        self.x.abs() + self.y.abs() + self.z.abs()
    }

    #[inline]
    pub fn norm_inf(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Returns `None` for a zero (or non-finite) vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `(1 - t) * self + t * o`
    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self * (T::one() - t) + o * t
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    #[inline]
    pub fn component(self, i: usize) -> T {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real + Serialize> Serialize for Vec3<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Vec3<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[T; 3]>::deserialize(d)?;
        Ok(Self::from_array(a))
    }
}

/// Rotation stored as a unit quaternion with `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion<T> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Normalizes `(w, x, y, z)` and picks the `w >= 0` representative.
    pub fn new_normalize(w: T, x: T, y: T, z: T) -> Result<Self, GeomError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(GeomError::DegenerateQuaternion);
        }
        let (mut w, mut x, mut y, mut z) = (w / n, x / n, y / n, z / n);
        let flip = if w != T::zero() {
            w < T::zero()
        } else {
            // w == 0: first nonzero vector component positive
            [x, y, z]
                .into_iter()
                .find(|c| *c != T::zero())
                .is_some_and(|c| c < T::zero())
        };
        if flip {
            w = -w;
            x = -x;
            y = -y;
            z = -z;
        }
        Ok(Self { w, x, y, z })
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Result<Self, GeomError> {
        let a = axis.normalized().ok_or(GeomError::DegenerateQuaternion)?;
        let half = angle / T::lit(2.0);
        let s = half.sin();
        Self::new_normalize(half.cos(), a.x * s, a.y * s, a.z * s)
    }

    /// Components in `[w, x, y, z]` order.
    #[inline]
    pub fn coords(&self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn w(&self) -> T {
        self.w
    }

    #[inline]
    pub fn vector(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * o`.
    pub fn mul(&self, o: &Self) -> Self {
        let w = self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z;
        let x = self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y;
        let y = self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x;
        let z = self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w;
        Self::new_normalize(w, x, y, z).unwrap_or_else(|_| Self::identity())
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        // v' = v + 2w(q x v) + 2 q x (q x v)
        let q = self.vector();
        let two = T::lit(2.0);
        let t = q.cross(v) * two;
        v + t * self.w + q.cross(t)
    }

    pub fn to_rotation_matrix(&self) -> [[T; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        [
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ]
    }

    /// Shepperd's method.
    pub fn from_rotation_matrix(m: &[[T; 3]; 3]) -> Result<Self, GeomError> {
        let one = T::one();
        let quarter = T::lit(0.25);
        let two = T::lit(2.0);
        let tr = m[0][0] + m[1][1] + m[2][2];
        if tr > T::zero() {
            let s = (tr + one).sqrt() * two;
            Self::new_normalize(
                quarter * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * two;
            Self::new_normalize(
                (m[2][1] - m[1][2]) / s,
                quarter * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * two;
            Self::new_normalize(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                quarter * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * two;
            Self::new_normalize(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                quarter * s,
            )
        }
    }

    /// Rotation angle in `[0, pi]` between two orientations.
    pub fn angle_to(&self, o: &Self) -> T {
        let d = self.dot(o).abs().min(T::one());
        T::lit(2.0) * d.acos()
    }

    /// Yaw (rotation about world z) extracted from the rotation matrix.
    pub fn yaw(&self) -> T {
        let m = self.to_rotation_matrix();
        m[1][0].atan2(m[0][0])
    }

    pub fn slerp(&self, other: &Self, t: T) -> Self {
        slerp(self, other, t)
    }
}

impl<T: Real + Serialize> Serialize for UnitQuaternion<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for UnitQuaternion<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[T; 4]>::deserialize(d)?;
        // stored unit quaternions load bit-exactly; anything else is renormalized
        let n2 = w * w + x * x + y * y + z * z;
        if w > T::zero() && (n2 - T::one()).abs() <= T::lit(8.0) * T::epsilon() {
            return Ok(Self { w, x, y, z });
        }
        Self::new_normalize(w, x, y, z).map_err(D::Error::custom)
    }
}

/// Spherical linear interpolation along the shorter arc.
///
/// `t = 0` yields `a`, `t = 1` yields `b` (up to the sign of the
/// representative). Nearly parallel inputs fall back to normalized linear
/// interpolation.
pub fn slerp<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>, t: T) -> UnitQuaternion<T> {
    let mut d = a.dot(b);
    let mut bc = b.coords();
    if d < T::zero() {
        d = -d;
        bc = bc.map(|c| -c);
    }
    let ac = a.coords();
    let (wa, wb) = if d > T::one() - T::lit(1e-6) {
        (T::one() - t, t)
    } else {
        let theta = d.min(T::one()).acos();
        let s = theta.sin();
        (
            ((T::one() - t) * theta).sin() / s,
            (t * theta).sin() / s,
        )
    };
    UnitQuaternion::new_normalize(
        wa * ac[0] + wb * bc[0],
        wa * ac[1] + wb * bc[1],
        wa * ac[2] + wb * bc[2],
        wa * ac[3] + wb * bc[3],
    )
    .unwrap_or(*a)
}

/// Rotation of `psi` radians about world z (roll = pitch = 0).
pub fn quat_from_yaw<T: Real>(psi: T) -> UnitQuaternion<T> {
    let half = psi / T::lit(2.0);
    UnitQuaternion::new_normalize(half.cos(), T::zero(), T::zero(), half.sin())
        .expect("yaw quaternion has unit norm")
}

/// Position plus orientation; the command currency of the controllers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Pose<T> {
    #[serde(rename = "pos")]
    pub position: Vec3<T>,
    #[serde(rename = "quat")]
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vec3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_position(position: Vec3<T>) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// Maps a point expressed in this pose's local frame to the parent frame.
    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.orientation.rotate(p) + self.position
    }

    pub fn inverse_transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.orientation.conjugate().rotate(p - self.position)
    }
}

/// Element of SE(3) stored as a rotation matrix and a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct RigidTransform<T> {
    rotation: [[T; 3]; 3],
    translation: Vec3<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: Vec3::zeros(),
        }
    }

    /// Validates `R Rᵀ = I` and `det R = +1`.
    pub fn new(rotation: [[T; 3]; 3], translation: Vec3<T>) -> Result<Self, GeomError> {
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        let mut dev = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s += rotation[i][k] * rotation[j][k];
                }
                let target = if i == j { T::one() } else { T::zero() };
                dev = dev.max((s - target).abs());
            }
        }
        let det = det3(&rotation);
        dev = dev.max((det - T::one()).abs());
        if !(dev <= tol) || !translation.is_finite() {
            return Err(GeomError::NotRotation(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_pose(pose: &Pose<T>) -> Self {
        Self {
            rotation: pose.orientation.to_rotation_matrix(),
            translation: pose.position,
        }
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self {
            translation: t,
            ..Self::identity()
        }
    }

    pub fn rotation(&self) -> &[[T; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3<T> {
        self.translation
    }

    #[inline]
    pub fn rotate(&self, p: Vec3<T>) -> Vec3<T> {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z,
        )
    }

    /// `R p + t`
    #[inline]
    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotate(p) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let mut inv = Self {
            rotation: rt,
            translation: Vec3::zeros(),
        };
        inv.translation = -inv.rotate(self.translation);
        inv
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut rot = [[T::zero(); 3]; 3];
        for (i, row) in rot.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                for k in 0..3 {
                    *v += self.rotation[i][k] * other.rotation[k][j];
                }
            }
        }
        Self {
            rotation: rot,
            translation: self.transform_point(other.translation),
        }
    }
}

/// `R p + t`
pub fn transform_point<T: Real>(tf: &RigidTransform<T>, p: Vec3<T>) -> Vec3<T> {
    tf.transform_point(p)
}

fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Pinhole intrinsics in pixels. Pixel `(u, v)` has its center at integer
/// image coordinates `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeomError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeomError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(GeomError::InvalidIntrinsics("cx outside image"));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeomError::InvalidIntrinsics("cy outside image"));
        }
        Ok(())
    }

    /// Camera-frame point to image coordinates; `None` behind the camera.
    pub fn project(&self, p: Vec3<f64>) -> Option<[f64; 2]> {
        if p.z <= 0.0 {
            return None;
        }
        Some([self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy])
    }

    /// Pinhole back-projection of image coordinates at depth `z`.
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Vec3<f64> {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }
}
