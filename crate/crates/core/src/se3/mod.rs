//! Rigid-body poses, the weighted grasp distance, orientation grids and
//! random pose sampling.

mod fps;
pub mod grid;
pub mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Aabb, Quat, Vec3};
use crate::scalar::Real;

pub use fps::{farthest_point_indices, farthest_point_subset};
pub use grid::{so3_grid, Se3Grid};
pub use random::{sample_cone, sample_uniform_pose, uniform_direction, uniform_quaternion};

/// Rigid transform: position in mm and a unit quaternion kept in canonical form (`w >= 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub p: Vec3<T>,
    pub q: Quat<T>,
}

impl<T: Real> Pose<T> {
    /// Normalises and canonicalises `q`.
    pub fn new(p: Vec3<T>, q: Quat<T>) -> Self {
        Self { p, q: q.normalized().canonical() }
    }

    pub fn identity() -> Self {
        Self { p: Vec3::zero(), q: Quat::identity() }
    }

    pub fn from_translation(p: Vec3<T>) -> Self {
        Self { p, q: Quat::identity() }
    }

    /// Maps a point from the pose frame to the world frame.
    #[inline]
    pub fn transform_point(&self, v: Vec3<T>) -> Vec3<T> {
        self.p + self.q.rotate(v)
    }

    #[inline]
    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        self.q.rotate(v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.transform_point(other.p), self.q.mul(other.q))
    }

    pub fn inverse(&self) -> Self {
        let qi = self.q.conjugate();
        Self::new(-qi.rotate(self.p), qi)
    }

    pub fn to_f64_array(&self) -> [f64; 7] {
        let [x, y, z] = self.p.to_f64();
        [x, y, z, self.q.w.as_f64(), self.q.x.as_f64(), self.q.y.as_f64(), self.q.z.as_f64()]
    }

    pub fn from_f64_array(a: [f64; 7]) -> Self {
        Self::new(
            Vec3::from_f64([a[0], a[1], a[2]]),
            Quat::new(T::lit(a[3]), T::lit(a[4]), T::lit(a[5]), T::lit(a[6])),
        )
    }
}

/// Weight relating translation (mm) to rotation (radians) in [`pose_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct MetricParams<T> {
    pub omega: T,
}

impl<T: Real> MetricParams<T> {
    pub fn new(omega: T) -> Result<Self> {
        if omega > T::zero() && omega.is_finite() {
            Ok(Self { omega })
        } else {
            Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")))
        }
    }
}

impl<T: Real> Default for MetricParams<T> {
    /// One millimetre weighs the same as one degree of rotation. The rotation
    /// term measures half the rotation angle, hence π/360 rather than π/180.
    fn default() -> Self {
        Self { omega: T::PI() / T::lit(360.0) }
    }
}

/// Geodesic distance between orientations, `acos |<a, b>|` (half the relative rotation angle).
///
/// Evaluated as `2 atan2(min(|a - b|, |a + b|), max(..))`, which equals the
/// arccosine form for unit quaternions but stays accurate near zero.
#[inline]
pub fn rotation_distance<T: Real>(a: Quat<T>, b: Quat<T>) -> T {
    let diff = Quat::new(a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z).norm();
    let sum = Quat::new(a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z).norm();
    T::two() * diff.min(sum).atan2(diff.max(sum))
}

/// `omega * |g.p - h.p| + acos |<g.q, h.q>|`.
#[inline]
pub fn pose_distance<T: Real>(g: &Pose<T>, h: &Pose<T>, params: &MetricParams<T>) -> T {
    params.omega * (g.p - h.p).norm() + rotation_distance(g.q, h.q)
}

/// Grid resolution and the translational region it spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    /// Lattice spacing in mm.
    pub translation_step: T,
    /// Angular spacing in degrees.
    pub rotation_step: T,
    pub bounds: Aabb<T>,
}

impl<T: Real> GridSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.translation_step > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "translation step must be positive, got {}",
                self.translation_step
            )));
        }
        if !(self.rotation_step > T::zero() && self.rotation_step <= T::lit(180.0)) {
            return Err(Error::InvalidStep(self.rotation_step.as_f64()));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidGrid("bounds are empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_mm_equals_one_degree() {
        let params = MetricParams::<f64>::default();
        let origin = Pose::identity();
        let shifted = Pose::from_translation(Vec3::new(1.0, 0.0, 0.0));
        let turned = Pose::new(Vec3::zero(), Quat::from_axis_angle(Vec3::unit_z(), 1f64.to_radians()));
        let dt = pose_distance(&origin, &shifted, &params);
        let dr = pose_distance(&origin, &turned, &params);
        assert!((dt - std::f64::consts::PI / 360.0).abs() < 1e-15);
        assert!((dt - dr).abs() < 1e-12, "{dt} vs {dr}");
        assert!((dt - 0.0087266).abs() < 1e-7);
    }

    #[test]
    fn quarter_turn_is_pi_over_four() {
        let params = MetricParams::<f64>::default();
        let turned = Pose::new(Vec3::zero(), Quat::from_axis_angle(Vec3::unit_z(), std::f64::consts::FRAC_PI_2));
        let d = pose_distance(&Pose::identity(), &turned, &params);
        assert!((d - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let params = MetricParams::<f32>::default();
        let a = Pose::new(Vec3::new(1.0f32, 2.0, 3.0), Quat::from_axis_angle(Vec3::unit_x(), 0.3));
        assert_eq!(pose_distance(&a, &a, &params), 0.0);
        let b = Pose::from_translation(Vec3::new(1.0f32, 2.0, 4.0));
        assert!((pose_distance(&a, &b, &params) - (params.omega + 0.15)).abs() < 1e-5);
    }

    #[test]
    fn compose_inverse_is_identity() {
        let a = Pose::new(Vec3::new(3.0, -2.0, 7.0), Quat::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 1.2_f64));
        let id = a.compose(&a.inverse());
        assert!(id.p.norm() < 1e-12);
        assert!(rotation_distance(id.q, Quat::identity()) < 1e-7);
    }

    #[test]
    fn invalid_params_and_grid() {
        assert!(MetricParams::new(0.0_f64).is_err());
        let bounds = Aabb::new(Vec3::zero(), Vec3::splat(10.0_f64));
        let g = GridSpec { translation_step: 5.0, rotation_step: 0.0, bounds };
        assert!(matches!(g.validate(), Err(Error::InvalidStep(_))));
        let g = GridSpec { translation_step: -1.0, rotation_step: 30.0, bounds };
        assert!(matches!(g.validate(), Err(Error::InvalidGrid(_))));
    }
}
