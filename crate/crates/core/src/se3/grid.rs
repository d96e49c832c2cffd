//! Deterministic orientation and pose grids.
//!
//! Orientations are the product of an S¹ ring and a geodesic (subdivided
//! icosahedron) point set on S², joined through Hopf coordinates. Every
//! rotation has exactly one parameterisation with the fibre angle in `[0, 2π)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{Quat, Vec3};
use crate::scalar::Real;
use crate::se3::{GridSpec, Pose};

const ICOSAHEDRON_FACES: [[u32; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosahedron<T: Real>() -> Vec<Vec3<T>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|&v| Vec3::<T>::from_f64(v).normalized())
    .collect()
}

/// Unit-sphere points of an icosahedron whose edges are split into `frequency`
/// segments, plus the triangulation. `frequency = 1` is the icosahedron itself.
pub fn icosahedron_subdivided<T: Real>(frequency: usize) -> (Vec<Vec3<T>>, Vec<[u32; 3]>) {
    assert!(frequency >= 1);
    let base = icosahedron::<T>();
    let n = frequency as u32;
    let mut index: HashMap<Vec<(u32, u32)>, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for face in ICOSAHEDRON_FACES {
        // lattice point (i, j): weights (n - i - j, i, j) on the face corners
        let mut id = |i: u32, j: u32| -> u32 {
            let mut key: Vec<(u32, u32)> = [(face[0], n - i - j), (face[1], i), (face[2], j)]
                .into_iter()
                .filter(|&(_, w)| w > 0)
                .collect();
            key.sort_unstable();
            *index.entry(key).or_insert_with(|| {
                let inv = T::one() / T::lit(n as f64);
                let p = base[face[0] as usize] * (T::lit((n - i - j) as f64) * inv)
                    + base[face[1] as usize] * (T::lit(i as f64) * inv)
                    + base[face[2] as usize] * (T::lit(j as f64) * inv);
                vertices.push(p.normalized());
                (vertices.len() - 1) as u32
            })
        };
        for i in 0..n {
            for j in 0..n - i {
                let a = id(i, j);
                let b = id(i + 1, j);
                let c = id(i, j + 1);
                faces.push([a, b, c]);
                if i + j + 1 < n {
                    let d = id(i + 1, j + 1);
                    faces.push([b, d, c]);
                }
            }
        }
    }
    (vertices, faces)
}

/// Longest edge of a triangulated point set on the unit sphere, in radians.
fn max_edge_angle<T: Real>(vertices: &[Vec3<T>], faces: &[[u32; 3]]) -> T {
    faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(a, b)| vertices[a as usize].angle_to(vertices[b as usize]))
        .fold(T::zero(), T::max)
}

fn tetrahedron<T: Real>() -> (Vec<Vec3<T>>, Vec<[u32; 3]>) {
    let s = T::one() / T::lit(3.0).sqrt();
    let v = [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)];
    let vertices = v.iter().map(|&(x, y, z)| Vec3::new(T::lit(x) * s, T::lit(y) * s, T::lit(z) * s)).collect();
    (vertices, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

fn octahedron<T: Real>() -> (Vec<Vec3<T>>, Vec<[u32; 3]>) {
    let (o, l) = (T::zero(), T::one());
    let vertices = vec![
        Vec3::new(l, o, o),
        Vec3::new(-l, o, o),
        Vec3::new(o, l, o),
        Vec3::new(o, -l, o),
        Vec3::new(o, o, l),
        Vec3::new(o, o, -l),
    ];
    let faces = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    (vertices, faces)
}

/// Coarsest S² point set in the sequence tetrahedron, octahedron, geodesic
/// icosahedra of increasing frequency whose longest edge is at most `max_edge` radians.
///
/// The polyhedra cover steps too coarse for any icosahedral set, which would
/// otherwise put neighbours much closer than the step.
pub fn sphere_grid<T: Real>(max_edge: T) -> Vec<Vec3<T>> {
    for (vertices, faces) in [tetrahedron::<T>(), octahedron::<T>()] {
        if max_edge_angle(&vertices, &faces) <= max_edge {
            return vertices;
        }
    }
    let mut frequency = 1;
    loop {
        let (vertices, faces) = icosahedron_subdivided::<T>(frequency);
        if max_edge_angle(&vertices, &faces) <= max_edge {
            return vertices;
        }
        frequency += 1;
    }
}

/// Quaternion from Hopf coordinates: S² point `dir` and fibre angle `psi`.
pub fn hopf_quaternion<T: Real>(dir: Vec3<T>, psi: T) -> Quat<T> {
    let theta = dir.z.acos_clamped();
    let phi = dir.y.atan2(dir.x);
    let (st, ct) = (theta * T::half()).sin_cos();
    let half_psi = psi * T::half();
    Quat::new(
        ct * half_psi.cos(),
        ct * half_psi.sin(),
        st * (phi + half_psi).cos(),
        st * (phi + half_psi).sin(),
    )
    .normalized()
    .canonical()
}

/// Evenly distributed orientations with roughly `rotation_step` degrees between neighbours.
///
/// The fibre is split into `ceil(360 / step)` rings and the sphere is subdivided
/// until its longest edge is at most `step`. The order is deterministic: base
/// points outer, fibre angle inner.
pub fn so3_grid<T: Real>(rotation_step: T) -> Result<Vec<Quat<T>>> {
    if !(rotation_step > T::zero() && rotation_step <= T::lit(180.0)) {
        return Err(Error::InvalidStep(rotation_step.as_f64()));
    }
    let rings = (T::lit(360.0) / rotation_step - T::lit(1e-9)).ceil().to_usize().unwrap().max(1);
    let base = sphere_grid(rotation_step.to_radians());
    let two_pi = T::two() * T::PI();
    let mut out = Vec::with_capacity(base.len() * rings);
    for dir in base {
        for k in 0..rings {
            let psi = two_pi * T::lit(k as f64) / T::lit(rings as f64);
            out.push(hopf_quaternion(dir, psi));
        }
    }
    Ok(out)
}

/// Lattice nodes per axis: inclusive of the lower bound, extended until the upper bound is covered.
fn lattice_counts<T: Real>(spec: &GridSpec<T>) -> [usize; 3] {
    let e = spec.bounds.extent();
    let count = |extent: T| -> usize {
        let steps = (extent / spec.translation_step - T::lit(1e-9)).ceil().max(T::zero());
        steps.to_usize().unwrap() + 1
    };
    [count(e.x), count(e.y), count(e.z)]
}

/// Product of a translation lattice and [`so3_grid`], enumerated lazily.
///
/// Index order: translation node (x fastest, then y, then z) outer, orientation inner.
#[derive(Debug, Clone)]
pub struct Se3Grid<T> {
    spec: GridSpec<T>,
    counts: [usize; 3],
    orientations: Vec<Quat<T>>,
}

impl<T: Real> Se3Grid<T> {
    pub fn new(spec: GridSpec<T>) -> Result<Self> {
        spec.validate()?;
        let orientations = so3_grid(spec.rotation_step)?;
        Ok(Self { counts: lattice_counts(&spec), spec, orientations })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn orientations(&self) -> &[Quat<T>] {
        &self.orientations
    }

    pub fn lattice_counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn translation_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn len(&self) -> usize {
        self.translation_count() * self.orientations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of lattice node `i`.
    pub fn translation(&self, i: usize) -> Vec3<T> {
        let [nx, ny, _] = self.counts;
        let (ix, iy, iz) = (i % nx, (i / nx) % ny, i / (nx * ny));
        let s = self.spec.translation_step;
        self.spec.bounds.min
            + Vec3::new(T::lit(ix as f64) * s, T::lit(iy as f64) * s, T::lit(iz as f64) * s)
    }

    pub fn pose(&self, index: usize) -> Pose<T> {
        let m = self.orientations.len();
        Pose { p: self.translation(index / m), q: self.orientations[index % m] }
    }

    pub fn iter(&self) -> impl Iterator<Item = Pose<T>> + '_ {
        (0..self.len()).map(move |i| self.pose(i))
    }
}
