//! Small fixed-size linear algebra: 3-vectors, rotation matrices, quaternions and boxes.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
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

    /// Unit vector in the same direction; the zero vector is returned unchanged.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self / n
        } else {
            self
        }
    }

    pub fn component_min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Self {
        Self::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max_element(self) -> T {
        self.x.max(self.y).max(self.z)
    }

    /// Index of the largest component.
    pub fn max_axis(self) -> usize {
        if self.x >= self.y && self.x >= self.z {
            0
        } else if self.y >= self.z {
            1
        } else {
            2
        }
    }

    /// A deterministic unit vector orthogonal to `self` (which must be non-zero).
    pub fn any_orthonormal(self) -> Self {
        let a = self.abs();
        let helper = if a.x <= a.y && a.x <= a.z {
            Self::unit_x()
        } else if a.y <= a.z {
            Self::unit_y()
        } else {
            Self::unit_z()
        };
        self.cross(helper).normalized()
    }

    /// Angle between two non-zero vectors in radians.
    pub fn angle_to(self, o: Self) -> T {
        let denom = self.norm() * o.norm();
        (self.dot(o) / denom).acos_clamped()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }
}

impl<T: Real> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
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

/// Row-major 3×3 matrix, used for rotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub rows: [Vec3<T>; 3],
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        Self::from_columns(Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z())
    }

    pub fn from_columns(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self {
            rows: [
                Vec3::new(c0.x, c1.x, c2.x),
                Vec3::new(c0.y, c1.y, c2.y),
                Vec3::new(c0.z, c1.z, c2.z),
            ],
        }
    }

    pub fn column(&self, i: usize) -> Vec3<T> {
        Vec3::new(self.rows[0][i], self.rows[1][i], self.rows[2][i])
    }

    pub fn transpose(&self) -> Self {
        Self::from_columns(self.rows[0], self.rows[1], self.rows[2])
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        Self::from_columns(
            self.mul_vec(o.column(0)),
            self.mul_vec(o.column(1)),
            self.mul_vec(o.column(2)),
        )
    }
}

/// Quaternion stored as `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quat<T> {
    #[inline]
    pub const fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation of `angle` radians about the unit `axis`.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let (s, c) = (angle * T::half()).sin_cos();
        let a = axis.normalized() * s;
        Self::new(c, a.x, a.y, a.z)
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * o`.
    pub fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    /// Double-cover representative: `w >= 0`, ties broken by the first
    /// non-zero component being positive.
    pub fn canonical(self) -> Self {
        let flip = if self.w != T::zero() {
            self.w < T::zero()
        } else if self.x != T::zero() {
            self.x < T::zero()
        } else if self.y != T::zero() {
            self.y < T::zero()
        } else {
            self.z < T::zero()
        };
        if flip {
            self.neg()
        } else {
            self
        }
    }

    pub fn to_matrix(self) -> Mat3<T> {
        let Self { w, x, y, z } = self;
        let two = T::two();
        let one = T::one();
        Mat3 {
            rows: [
                Vec3::new(one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)),
                Vec3::new(two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)),
                Vec3::new(two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)),
            ],
        }
    }

    /// Quaternion of a proper rotation matrix (Shepperd's method).
    pub fn from_matrix(m: &Mat3<T>) -> Self {
        let r = |i: usize, j: usize| m.rows[i][j];
        let one = T::one();
        let quarter = T::lit(0.25);
        let trace = r(0, 0) + r(1, 1) + r(2, 2);
        let q = if trace > T::zero() {
            let s = (trace + one).sqrt() * T::two();
            Self::new(quarter * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s)
        } else if r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2) {
            let s = (one + r(0, 0) - r(1, 1) - r(2, 2)).sqrt() * T::two();
            Self::new((r(2, 1) - r(1, 2)) / s, quarter * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s)
        } else if r(1, 1) > r(2, 2) {
            let s = (one + r(1, 1) - r(0, 0) - r(2, 2)).sqrt() * T::two();
            Self::new((r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, quarter * s, (r(1, 2) + r(2, 1)) / s)
        } else {
            let s = (one + r(2, 2) - r(0, 0) - r(1, 1)).sqrt() * T::two();
            Self::new((r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, quarter * s)
        };
        q.normalized()
    }

    /// Rotation whose frame has the given x and z axes (both unit, orthogonal).
    pub fn from_frame_xz(x_axis: Vec3<T>, z_axis: Vec3<T>) -> Self {
        let y_axis = z_axis.cross(x_axis);
        Self::from_matrix(&Mat3::from_columns(x_axis, y_axis, z_axis))
    }

    #[inline]
    pub fn rotate(self, v: Vec3<T>) -> Vec3<T> {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * T::two();
        v + t * self.w + u.cross(t)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Self { min, max }
    }

    /// The empty box: growing it by any point yields that point.
    pub fn empty() -> Self {
        Self::new(Vec3::splat(T::infinity()), Vec3::splat(T::neg_infinity()))
    }

    pub fn from_points(points: impl IntoIterator<Item = Vec3<T>>) -> Self {
        points.into_iter().fold(Self::empty(), |b, p| b.grown(p))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn grown(self, p: Vec3<T>) -> Self {
        Self::new(self.min.component_min(p), self.max.component_max(p))
    }

    pub fn union(self, o: Self) -> Self {
        Self::new(self.min.component_min(o.min), self.max.component_max(o.max))
    }

    pub fn dilated(self, r: T) -> Self {
        Self::new(self.min - Vec3::splat(r), self.max + Vec3::splat(r))
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::half()
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    #[inline]
    pub fn overlaps(&self, o: &Self) -> bool {
        self.min.x <= o.max.x
            && self.max.x >= o.min.x
            && self.min.y <= o.max.y
            && self.max.y >= o.min.y
            && self.min.z <= o.max.z
            && self.max.z >= o.min.z
    }

    /// Slab test; returns the parameter interval `[t0, t1]` clipped to `[t_min, t_max]`.
    #[inline]
    pub fn ray_interval(&self, origin: Vec3<T>, inv_dir: Vec3<T>, t_min: T, t_max: T) -> Option<(T, T)> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            let inv = inv_dir[axis];
            let mut near = (self.min[axis] - origin[axis]) * inv;
            let mut far = (self.max[axis] - origin[axis]) * inv;
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN (0 * inf) means the origin lies on a slab plane of a parallel ray.
            if !near.is_nan() {
                t0 = t0.max(near);
            }
            if !far.is_nan() {
                t1 = t1.min(far);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// Distance from `p` to the box (zero inside).
    pub fn distance_to(&self, p: Vec3<T>) -> T {
        let d = (self.min - p).component_max(p - self.max).component_max(Vec3::zero());
        d.norm()
    }
}

/// Oriented box: a center, a rotation whose columns are the box axes, and half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb<T> {
    pub center: Vec3<T>,
    pub axes: Mat3<T>,
    pub half_extents: Vec3<T>,
}

impl<T: Real> Obb<T> {
    pub fn new(center: Vec3<T>, rotation: Quat<T>, half_extents: Vec3<T>) -> Self {
        Self { center, axes: rotation.to_matrix(), half_extents }
    }

    pub fn axis_aligned(center: Vec3<T>, half_extents: Vec3<T>) -> Self {
        Self { center, axes: Mat3::identity(), half_extents }
    }

    /// World point expressed in box coordinates.
    #[inline]
    pub fn to_local(&self, p: Vec3<T>) -> Vec3<T> {
        // axes is a rotation, so its transpose is its inverse
        let d = p - self.center;
        Vec3::new(self.axes.column(0).dot(d), self.axes.column(1).dot(d), self.axes.column(2).dot(d))
    }

    pub fn world_aabb(&self) -> Aabb<T> {
        let h = self.half_extents;
        let r = Vec3::new(
            self.axes.rows[0].abs().dot(h),
            self.axes.rows[1].abs().dot(h),
            self.axes.rows[2].abs().dot(h),
        );
        Aabb::new(self.center - r, self.center + r)
    }

    pub fn bounding_radius(&self) -> T {
        self.half_extents.norm()
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        let l = self.to_local(p).abs();
        l.x <= self.half_extents.x && l.y <= self.half_extents.y && l.z <= self.half_extents.z
    }
}
