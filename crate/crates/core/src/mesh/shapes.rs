//! Closed primitive meshes used as test objects (millimetres, centred on their AABB).

use crate::linalg::Vec3;
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Axis-aligned box with the given full extents.
pub fn cuboid<T: Real>(extents: Vec3<T>) -> TriMesh<T> {
    let h = extents * T::half();
    let polygon = [(-h.x, -h.y), (h.x, -h.y), (h.x, h.y), (-h.x, h.y)];
    extrude(&polygon, extents.z)
}

/// Thin rectangular plate lying in the x–y plane.
pub fn plate<T: Real>(length: T, width: T, thickness: T) -> TriMesh<T> {
    cuboid(Vec3::new(length, width, thickness))
}

/// Regular `segments`-gon prism along z.
pub fn cylinder<T: Real>(radius: T, height: T, segments: usize) -> TriMesh<T> {
    assert!(segments >= 3);
    let polygon: Vec<(T, T)> = (0..segments)
        .map(|i| {
            let a = T::two() * T::PI() * T::lit(i as f64) / T::lit(segments as f64);
            (radius * a.cos(), radius * a.sin())
        })
        .collect();
    extrude(&polygon, height)
}

/// L-shaped profile in the x–y plane (legs `length` along x and `height` along y,
/// both `thickness` thick), extruded `width` along z.
pub fn l_bracket<T: Real>(length: T, height: T, thickness: T, width: T) -> TriMesh<T> {
    let z = T::zero();
    let polygon = [
        (z, z),
        (length, z),
        (length, thickness),
        (thickness, thickness),
        (thickness, height),
        (z, height),
    ];
    let cx = length * T::half();
    let cy = height * T::half();
    let centred: Vec<(T, T)> = polygon.iter().map(|&(x, y)| (x - cx, y - cy)).collect();
    extrude(&centred, width)
}

/// Icosphere: an icosahedron subdivided `depth` times and projected to the sphere.
pub fn icosphere<T: Real>(radius: T, depth: usize) -> TriMesh<T> {
    let (vertices, faces) = crate::se3::grid::icosahedron_subdivided::<T>(1 << depth);
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriMesh::new(vertices, faces).expect("icosphere is non-degenerate")
}

/// Extrudes a counter-clockwise polygon (star-shaped around its first vertex)
/// symmetrically about z = 0.
pub fn extrude<T: Real>(polygon: &[(T, T)], depth: T) -> TriMesh<T> {
    let n = polygon.len();
    let hz = depth * T::half();
    let mut vertices = Vec::with_capacity(2 * n);
    for &(x, y) in polygon {
        vertices.push(Vec3::new(x, y, -hz));
    }
    for &(x, y) in polygon {
        vertices.push(Vec3::new(x, y, hz));
    }
    let n32 = n as u32;
    let mut faces = Vec::with_capacity(4 * n);
    for i in 1..n32 - 1 {
        // bottom faces point down, top faces up
        faces.push([0, i + 1, i]);
        faces.push([n32, n32 + i, n32 + i + 1]);
    }
    for i in 0..n32 {
        let j = (i + 1) % n32;
        faces.push([i, j, n32 + j]);
        faces.push([i, n32 + j, n32 + i]);
    }
    TriMesh::new(vertices, faces).expect("extruded polygon is non-degenerate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives_are_closed_with_expected_area() {
        let p: TriMesh<f64> = plate(60.0, 40.0, 2.0);
        assert!(p.is_watertight());
        assert!((p.total_area() - 2.0 * (2400.0 + 120.0 + 80.0)).abs() < 1e-9);
        let c: TriMesh<f64> = cylinder(15.0, 40.0, 32);
        assert!(c.is_watertight());
        let l: TriMesh<f64> = l_bracket(50.0, 40.0, 5.0, 20.0);
        assert!(l.is_watertight());
        let s: TriMesh<f64> = icosphere(10.0, 2);
        assert!(s.is_watertight());
        assert!(s.com().norm() < 1e-9);
    }
}
