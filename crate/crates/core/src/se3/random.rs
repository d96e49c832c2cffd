//! Pseudo-random directions, cones, orientations and poses.

use rand::Rng;

use crate::linalg::{Aabb, Quat, Vec3};
use crate::scalar::Real;
use crate::se3::Pose;

#[inline]
fn unit<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.gen::<f64>())
}

/// Uniform rotation by the subgroup algorithm (Shoemake), canonicalised.
pub fn uniform_quaternion<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Quat<T> {
    let u1: T = unit(rng);
    let u2: T = unit(rng);
    let u3: T = unit(rng);
    let two_pi = T::two() * T::PI();
    let a = (T::one() - u1).sqrt();
    let b = u1.sqrt();
    Quat::new(
        b * (two_pi * u3).cos(),
        a * (two_pi * u2).sin(),
        a * (two_pi * u2).cos(),
        b * (two_pi * u3).sin(),
    )
    .canonical()
}

/// Uniform point on the unit sphere.
pub fn uniform_direction<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Vec3<T> {
    let z = T::two() * unit::<T, R>(rng) - T::one();
    let phi = T::two() * T::PI() * unit::<T, R>(rng);
    let r = (T::one() - z * z).max(T::zero()).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Uniform direction on the spherical cap of half-angle `half_angle` around the unit `axis`.
///
/// A zero half-angle returns `axis` exactly.
pub fn sample_cone<T: Real, R: Rng + ?Sized>(axis: Vec3<T>, half_angle: T, rng: &mut R) -> Vec3<T> {
    let u: T = unit(rng);
    let v: T = unit(rng);
    let cos_theta = T::one() - u * (T::one() - half_angle.cos());
    let sin_theta = (T::one() - cos_theta * cos_theta).max(T::zero()).sqrt();
    let phi = T::two() * T::PI() * v;
    let e1 = axis.any_orthonormal();
    let e2 = axis.cross(e1);
    axis * cos_theta + (e1 * phi.cos() + e2 * phi.sin()) * sin_theta
}

/// Position uniform in `bounds`, orientation uniform on SO(3).
pub fn sample_uniform_pose<T: Real, R: Rng + ?Sized>(bounds: &Aabb<T>, rng: &mut R) -> Pose<T> {
    let e = bounds.extent();
    let p = bounds.min + Vec3::new(e.x * unit::<T, R>(rng), e.y * unit::<T, R>(rng), e.z * unit::<T, R>(rng));
    Pose { p, q: uniform_quaternion(rng) }
}
