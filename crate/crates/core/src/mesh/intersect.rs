//! Exact primitive tests shared by the BVH traversal and brute-force scans.

use crate::linalg::{Obb, Vec3};
use crate::scalar::Real;

/// Möller–Trumbore ray/triangle intersection with inclusive edges.
///
/// Returns the ray parameter of the hit, if any, without any lower bound on `t`.
#[inline]
pub fn ray_triangle<T: Real>(origin: Vec3<T>, dir: Vec3<T>, tri: [Vec3<T>; 3]) -> Option<T> {
    let tol = T::epsilon() * T::lit(64.0);
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= scale * tol {
        return None;
    }
    let inv = T::one() / det;
    let s = origin - tri[0];
    let u = s.dot(p) * inv;
    if u < -tol || u > T::one() + tol {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < -tol || u + v > T::one() + tol {
        return None;
    }
    Some(e2.dot(q) * inv)
}

/// Separating-axis test between an oriented box and a triangle. Touching counts as intersecting.
pub fn obb_triangle<T: Real>(obb: &Obb<T>, tri: [Vec3<T>; 3]) -> bool {
    let v = [obb.to_local(tri[0]), obb.to_local(tri[1]), obb.to_local(tri[2])];
    aabb_triangle_centered(obb.half_extents, v)
}

/// Triangle against the box `[-h, h]` (Akenine-Möller's 13-axis test).
fn aabb_triangle_centered<T: Real>(h: Vec3<T>, v: [Vec3<T>; 3]) -> bool {
    // box face normals
    for axis in 0..3 {
        let lo = v[0][axis].min(v[1][axis]).min(v[2][axis]);
        let hi = v[0][axis].max(v[1][axis]).max(v[2][axis]);
        if lo > h[axis] || hi < -h[axis] {
            return false;
        }
    }

    let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let unit = [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()];
    for e in edges {
        for u in unit {
            let axis = u.cross(e);
            if axis.norm_squared() == T::zero() {
                continue;
            }
            if separated(axis, h, &v) {
                return false;
            }
        }
    }

    // triangle plane
    let n = edges[0].cross(edges[1]);
    if n.norm_squared() > T::zero() && separated(n, h, &v) {
        return false;
    }
    true
}

#[inline]
fn separated<T: Real>(axis: Vec3<T>, h: Vec3<T>, v: &[Vec3<T>; 3]) -> bool {
    let p0 = axis.dot(v[0]);
    let p1 = axis.dot(v[1]);
    let p2 = axis.dot(v[2]);
    let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
    p0.min(p1).min(p2) > r || p0.max(p1).max(p2) < -r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Quat;

    fn tri() -> [Vec3<f64>; 3] {
        [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]
    }

    #[test]
    fn ray_hits_interior_and_edges() {
        let down = Vec3::new(0.0, 0.0, -1.0);
        assert_eq!(ray_triangle(Vec3::new(0.25, 0.25, 1.0), down, tri()), Some(1.0));
        // exactly on the hypotenuse
        assert_eq!(ray_triangle(Vec3::new(0.5, 0.5, 2.0), down, tri()), Some(2.0));
        assert_eq!(ray_triangle(Vec3::new(0.6, 0.6, 2.0), down, tri()), None);
        // parallel
        assert_eq!(ray_triangle(Vec3::new(0.2, 0.2, 1.0), Vec3::unit_x(), tri()), None);
    }

    #[test]
    fn box_triangle_cases() {
        let b = Obb::axis_aligned(Vec3::new(0.2, 0.2, 0.0), Vec3::splat(0.1));
        assert!(obb_triangle(&b, tri()));
        let far = Obb::axis_aligned(Vec3::new(0.2, 0.2, 0.5), Vec3::splat(0.1));
        assert!(!obb_triangle(&far, tri()));
        // box beyond the hypotenuse, overlapping the triangle's AABB only
        let corner = Obb::axis_aligned(Vec3::new(0.9, 0.9, 0.0), Vec3::splat(0.1));
        assert!(!obb_triangle(&corner, tri()));
        // at this height only the rotated box reaches the plane through its tilt
        let center = Vec3::new(0.3, 0.3, 0.13);
        let aligned = Obb::axis_aligned(center, Vec3::splat(0.1));
        let tilted = Obb::new(center, Quat::from_axis_angle(Vec3::unit_x(), std::f64::consts::FRAC_PI_4), Vec3::splat(0.1));
        assert!(!obb_triangle(&aligned, tri()));
        assert!(obb_triangle(&tilted, tri()));
        let higher = Obb::new(Vec3::new(0.3, 0.3, 0.15), Quat::from_axis_angle(Vec3::unit_x(), std::f64::consts::FRAC_PI_4), Vec3::splat(0.1));
        assert!(!obb_triangle(&higher, tri()));
    }
}
