//! Triangle meshes: construction, ray casting, box overlap and surface sampling.
//!
//! Units are millimetres throughout. A [`TriMesh`] is immutable once built and
//! can be shared across threads for read-only queries.

mod bvh;
pub mod intersect;
mod io;
pub mod shapes;

use std::collections::HashMap;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Aabb, Obb, Vec3};
use crate::scalar::Real;

pub use bvh::Bvh;
pub use io::{load_mesh, load_mesh_scaled, write_obj, METERS_TO_MM};

/// Minimum ray parameter, in mm; avoids self-hits when casting from surface points.
pub const RAY_T_EPS: f64 = 1e-4;

/// Faces with area below this (mm²) are dropped at construction.
pub const DEGENERATE_AREA: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint<T> {
    pub position: Vec3<T>,
    /// Outward unit normal of `face_index`.
    pub normal: Vec3<T>,
    pub face_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<T> {
    pub t: T,
    pub position: Vec3<T>,
    pub normal: Vec3<T>,
    pub face_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayMode {
    First,
    Farthest,
    All,
}

/// How the centre of mass was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComSource {
    /// Volume centroid of a closed, consistently oriented mesh.
    Volume,
    /// Area-weighted surface centroid (open meshes).
    Surface,
}

#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[u32; 3]>,
    face_normals: Vec<Vec3<T>>,
    face_areas: Vec<T>,
    /// Running sum of face areas in f64, for area-weighted sampling.
    cumulative_area: Vec<f64>,
    aabb: Aabb<T>,
    sphere: (Vec3<T>, T),
    com: Vec3<T>,
    com_source: ComSource,
    watertight: bool,
    dropped_faces: usize,
    bvh: Bvh<T>,
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh, dropping degenerate faces.
    ///
    /// Closed meshes with inverted winding are flipped so normals point outward.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        if let Some(bad) = faces.iter().flatten().find(|&&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "face index {bad} out of range for {n} vertices"
            )));
        }
        let min_area = T::lit(DEGENERATE_AREA);
        let total = faces.len();
        let mut faces: Vec<[u32; 3]> = faces
            .into_iter()
            .filter(|f| tri_area(&vertices, f) >= min_area)
            .collect();
        let dropped_faces = total - faces.len();
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if dropped_faces > 0 {
            warn!("dropped {dropped_faces} degenerate faces");
        }

        let watertight = is_closed_manifold(&faces);
        let mut volume = signed_volume(&vertices, &faces);
        if watertight && volume < T::zero() {
            for f in &mut faces {
                f.swap(1, 2);
            }
            volume = -volume;
        }

        let mut face_normals = Vec::with_capacity(faces.len());
        let mut face_areas = Vec::with_capacity(faces.len());
        let mut cumulative_area = Vec::with_capacity(faces.len());
        let mut face_bounds = Vec::with_capacity(faces.len());
        let mut acc = 0.0;
        for f in &faces {
            let [a, b, c] = corners(&vertices, f);
            let cross = (b - a).cross(c - a);
            let len = cross.norm();
            face_normals.push(cross / len);
            face_areas.push(len * T::half());
            acc += (len * T::half()).as_f64();
            cumulative_area.push(acc);
            face_bounds.push(Aabb::from_points([a, b, c]));
        }

        let aabb = Aabb::from_points(vertices.iter().copied());
        let sphere_center = aabb.center();
        let sphere_radius = vertices
            .iter()
            .map(|v| v.distance(sphere_center))
            .fold(T::zero(), T::max);
        let (com, com_source) = if watertight && volume > T::zero() {
            (volume_centroid(&vertices, &faces, volume), ComSource::Volume)
        } else {
            warn!("mesh is not closed; using the surface centroid as centre of mass");
            (surface_centroid(&vertices, &faces, &face_areas), ComSource::Surface)
        };
        let bvh = Bvh::build(&face_bounds);
        Ok(Self {
            vertices,
            faces,
            face_normals,
            face_areas,
            cumulative_area,
            aabb,
            sphere: (sphere_center, sphere_radius),
            com,
            com_source,
            watertight,
            dropped_faces,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vec3<T>] {
        &self.face_normals
    }

    pub fn face_areas(&self) -> &[T] {
        &self.face_areas
    }

    pub fn total_area(&self) -> f64 {
        *self.cumulative_area.last().expect("non-empty mesh")
    }

    pub fn aabb(&self) -> Aabb<T> {
        self.aabb
    }

    pub fn com(&self) -> Vec3<T> {
        self.com
    }

    pub fn com_source(&self) -> ComSource {
        self.com_source
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    /// Degenerate faces removed at construction.
    pub fn dropped_faces(&self) -> usize {
        self.dropped_faces
    }

    pub fn triangle(&self, face: usize) -> [Vec3<T>; 3] {
        corners(&self.vertices, &self.faces[face])
    }

    /// Centre and radius of a sphere enclosing every vertex.
    pub fn bounding_sphere(&self) -> (Vec3<T>, T) {
        self.sphere
    }

    /// Returns a copy with every vertex mapped through `f` (rigid motions keep the
    /// face winding meaningful).
    pub fn transformed(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&v| f(v)).collect(), self.faces.clone())
    }

    fn hit(&self, origin: Vec3<T>, dir: Vec3<T>, face: usize, t: T) -> RayHit<T> {
        RayHit { t, position: origin + dir * t, normal: self.face_normals[face], face_index: face }
    }

    /// Casts a ray and reports hits with `t >= RAY_T_EPS` according to `mode`.
    ///
    /// `First` and `Farthest` yield at most one hit; `All` yields every hit sorted by `t`.
    pub fn raycast(&self, origin: Vec3<T>, dir: Vec3<T>, mode: RayMode) -> Vec<RayHit<T>> {
        match mode {
            RayMode::First => self.raycast_first(origin, dir).into_iter().collect(),
            RayMode::Farthest => self.raycast_farthest(origin, dir).into_iter().collect(),
            RayMode::All => self.raycast_all(origin, dir),
        }
    }

    pub fn raycast_first(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<RayHit<T>> {
        self.raycast_first_within(origin, dir, T::infinity())
    }

    /// First hit with `RAY_T_EPS <= t <= t_max`.
    pub fn raycast_first_within(&self, origin: Vec3<T>, dir: Vec3<T>, t_max: T) -> Option<RayHit<T>> {
        let t_eps = T::lit(RAY_T_EPS);
        let mut best: Option<(T, usize)> = None;
        self.bvh.traverse_ray(origin, dir, t_eps, t_max, |f| {
            if let Some(t) = intersect::ray_triangle(origin, dir, self.triangle(f)) {
                if t >= t_eps && t <= t_max && best.is_none_or(|(bt, bf)| t < bt || (t == bt && f < bf)) {
                    best = Some((t, f));
                }
            }
            best.map_or(t_max, |(t, _)| t)
        });
        best.map(|(t, f)| self.hit(origin, dir, f, t))
    }

    pub fn raycast_farthest(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<RayHit<T>> {
        let t_eps = T::lit(RAY_T_EPS);
        let mut best: Option<(T, usize)> = None;
        self.bvh.traverse_ray(origin, dir, t_eps, T::infinity(), |f| {
            if let Some(t) = intersect::ray_triangle(origin, dir, self.triangle(f)) {
                if t >= t_eps && best.is_none_or(|(bt, bf)| t > bt || (t == bt && f < bf)) {
                    best = Some((t, f));
                }
            }
            T::infinity()
        });
        best.map(|(t, f)| self.hit(origin, dir, f, t))
    }

    pub fn raycast_all(&self, origin: Vec3<T>, dir: Vec3<T>) -> Vec<RayHit<T>> {
        let t_eps = T::lit(RAY_T_EPS);
        let mut hits = Vec::new();
        self.bvh.traverse_ray(origin, dir, t_eps, T::infinity(), |f| {
            if let Some(t) = intersect::ray_triangle(origin, dir, self.triangle(f)) {
                if t >= t_eps {
                    hits.push((t, f));
                }
            }
            T::infinity()
        });
        hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        hits.into_iter().map(|(t, f)| self.hit(origin, dir, f, t)).collect()
    }

    /// True if any triangle touches the box.
    pub fn box_touches_surface(&self, obb: &Obb<T>) -> bool {
        let query = obb.world_aabb();
        self.bvh
            .any_overlapping(&query, |f| intersect::obb_triangle(obb, self.triangle(f)))
    }

    /// True if the box intersects the mesh surface or, for closed meshes, lies inside it.
    pub fn volume_intersects(&self, obb: &Obb<T>) -> bool {
        if !self.aabb.overlaps(&obb.world_aabb()) {
            return false;
        }
        if self.box_touches_surface(obb) {
            return true;
        }
        // No surface crossing: the box is entirely inside or entirely outside.
        self.watertight && self.aabb.contains(obb.center) && self.contains_point(obb.center)
    }

    /// Point-in-mesh test by ray parity, majority vote over three fixed directions.
    ///
    /// Meaningful only for closed meshes; open meshes always report `false`.
    pub fn contains_point(&self, p: Vec3<T>) -> bool {
        if !self.watertight || !self.aabb.contains(p) {
            return false;
        }
        let dirs = [
            Vec3::from_f64([0.5773502691896258, 0.5773502691896257, 0.577_350_269_189_626]),
            Vec3::from_f64([-0.2672612419124244, 0.8017837257372732, -0.5345224838248488]),
            Vec3::from_f64([0.8164965809277261, -0.4082482904638631, -0.4082482904638629]),
        ];
        let votes = dirs
            .iter()
            .filter(|&&d| {
                let mut crossings = 0usize;
                let mut last: Option<T> = None;
                let mut ts = Vec::new();
                self.bvh.traverse_ray(p, d, T::zero(), T::infinity(), |f| {
                    if let Some(t) = intersect::ray_triangle(p, d, self.triangle(f)) {
                        if t > T::zero() {
                            ts.push(t);
                        }
                    }
                    T::infinity()
                });
                ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                // hits through a shared edge or vertex show up once per incident face
                let merge = T::lit(1e-9) * (T::one() + self.aabb.extent().max_element());
                for t in ts {
                    if last.is_none_or(|l| t - l > merge) {
                        crossings += 1;
                    }
                    last = Some(t);
                }
                crossings % 2 == 1
            })
            .count();
        votes >= 2
    }

    /// Draws `n` points uniformly with respect to surface area.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<SurfacePoint<T>> {
        (0..n).map(|_| self.sample_surface_point(rng)).collect()
    }

    pub fn sample_surface_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfacePoint<T> {
        let total = self.total_area();
        let target = rng.gen::<f64>() * total;
        let face = self
            .cumulative_area
            .partition_point(|&c| c <= target)
            .min(self.faces.len() - 1);
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let s = r1.sqrt();
        let (wa, wb, wc) = (T::lit(1.0 - s), T::lit(s * (1.0 - r2)), T::lit(s * r2));
        let [a, b, c] = self.triangle(face);
        SurfacePoint { position: a * wa + b * wb + c * wc, normal: self.face_normals[face], face_index: face }
    }
}

fn corners<T: Real>(vertices: &[Vec3<T>], f: &[u32; 3]) -> [Vec3<T>; 3] {
    [vertices[f[0] as usize], vertices[f[1] as usize], vertices[f[2] as usize]]
}

fn tri_area<T: Real>(vertices: &[Vec3<T>], f: &[u32; 3]) -> T {
    let [a, b, c] = corners(vertices, f);
    (b - a).cross(c - a).norm() * T::half()
}

/// Every directed edge appears once and its reverse appears once.
fn is_closed_manifold(faces: &[[u32; 3]]) -> bool {
    let mut edges: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3);
    for f in faces {
        for k in 0..3 {
            *edges.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    edges
        .iter()
        .all(|(&(a, b), &count)| count == 1 && edges.get(&(b, a)) == Some(&1))
}

fn signed_volume<T: Real>(vertices: &[Vec3<T>], faces: &[[u32; 3]]) -> T {
    let six = T::lit(6.0);
    faces
        .iter()
        .map(|f| {
            let [a, b, c] = corners(vertices, f);
            a.dot(b.cross(c)) / six
        })
        .sum()
}

fn volume_centroid<T: Real>(vertices: &[Vec3<T>], faces: &[[u32; 3]], volume: T) -> Vec3<T> {
    let mut acc = Vec3::zero();
    for f in faces {
        let [a, b, c] = corners(vertices, f);
        let det = a.dot(b.cross(c));
        acc += (a + b + c) * det;
    }
    acc / (T::lit(24.0) * volume)
}

fn surface_centroid<T: Real>(vertices: &[Vec3<T>], faces: &[[u32; 3]], areas: &[T]) -> Vec3<T> {
    let mut acc = Vec3::zero();
    let mut total = T::zero();
    for (f, &area) in faces.iter().zip(areas) {
        let [a, b, c] = corners(vertices, f);
        acc += (a + b + c) * (area / T::lit(3.0));
        total = total + area;
    }
    acc / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn cube_properties() {
        let cube: TriMesh<f64> = shapes::cuboid(Vec3::splat(20.0));
        assert_eq!(cube.faces().len(), 12);
        assert!((cube.total_area() - 2400.0).abs() < 1e-9);
        assert!(cube.is_watertight());
        assert_eq!(cube.com_source(), ComSource::Volume);
        assert!(cube.com().norm() < 1e-12);
        for n in cube.face_normals() {
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn inverted_winding_is_flipped() {
        let cube: TriMesh<f64> = shapes::cuboid(Vec3::splat(20.0));
        let faces = cube.faces().iter().map(|f| [f[0], f[2], f[1]]).collect();
        let flipped = TriMesh::new(cube.vertices().to_vec(), faces).unwrap();
        let hit = flipped.raycast_first(Vec3::new(-100.0, 0.0, 0.0), Vec3::unit_x()).unwrap();
        assert!((hit.normal - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cube_ray_first_and_farthest() {
        let cube: TriMesh<f64> = shapes::cuboid(Vec3::splat(20.0));
        let o = Vec3::new(-100.0, 0.0, 0.0);
        let first = cube.raycast_first(o, Vec3::unit_x()).unwrap();
        let far = cube.raycast_farthest(o, Vec3::unit_x()).unwrap();
        assert!((first.t - 90.0).abs() < 1e-12 && (first.position.x + 10.0).abs() < 1e-12);
        assert!((far.t - 110.0).abs() < 1e-12 && (far.position.x - 10.0).abs() < 1e-12);
        assert!(cube.raycast_first(Vec3::new(-100.0, 50.0, 0.0), Vec3::unit_x()).is_none());
        assert!(cube.raycast(o, -Vec3::unit_x(), RayMode::All).is_empty());
    }

    #[test]
    fn degenerate_face_dropped() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let mesh: TriMesh<f64> = TriMesh::new(v, vec![[0, 1, 3], [0, 1, 2]]).unwrap();
        assert_eq!(mesh.faces().len(), 1);
        assert_eq!(mesh.dropped_faces(), 1);
        assert!(!mesh.is_watertight());
        assert_eq!(mesh.com_source(), ComSource::Surface);
    }

    #[test]
    fn empty_and_out_of_range() {
        let v = vec![Vec3::new(0.0_f64, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 2]]), Err(Error::EmptyMesh)));
        assert!(matches!(TriMesh::new(v, vec![[0, 1, 5]]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn containment() {
        let cube: TriMesh<f64> = shapes::cuboid(Vec3::splat(20.0));
        assert!(cube.contains_point(Vec3::zero()));
        assert!(cube.contains_point(Vec3::new(9.9, -9.9, 9.9)));
        assert!(!cube.contains_point(Vec3::new(10.1, 0.0, 0.0)));
        let inner = Obb::axis_aligned(Vec3::zero(), Vec3::splat(2.0));
        assert!(!cube.box_touches_surface(&inner));
        assert!(cube.volume_intersects(&inner));
        let far = Obb::axis_aligned(Vec3::new(1000.0, 0.0, 0.0), Vec3::splat(2.0));
        assert!(!cube.volume_intersects(&far));
    }

    #[test]
    fn volume_com_of_l_shape() {
        let l: TriMesh<f64> = shapes::l_bracket(50.0, 40.0, 5.0, 20.0);
        // two rectangles: 50x5 at (25, 2.5) and 5x35 at (2.5, 22.5)
        let (a1, a2) = (250.0, 175.0);
        let cx = (a1 * 25.0 + a2 * 2.5) / (a1 + a2);
        let cy = (a1 * 2.5 + a2 * 22.5) / (a1 + a2);
        assert_eq!(l.com_source(), ComSource::Volume);
        let origin = l.aabb().min;
        assert!((l.com().x - origin.x - cx).abs() < 1e-9, "{:?}", l.com());
        assert!((l.com().y - origin.y - cy).abs() < 1e-9);
    }
}
