//! Bounding volume hierarchy over triangle faces.

use crate::linalg::{Aabb, Vec3};
use crate::scalar::Real;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first index into `order`. Interior: index of the left child (right = left + 1).
    start: u32,
    /// Number of faces for a leaf, zero for interior nodes.
    count: u32,
}

/// Immutable BVH; leaves reference faces through a permutation table.
#[derive(Debug, Clone)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<u32>,
}

impl<T: Real> Bvh<T> {
    /// Builds the hierarchy with median splits along the widest centroid axis.
    pub fn build(face_bounds: &[Aabb<T>]) -> Self {
        let mut order: Vec<u32> = (0..face_bounds.len() as u32).collect();
        let centroids: Vec<Vec3<T>> = face_bounds.iter().map(|b| b.center()).collect();
        let mut nodes = Vec::with_capacity(2 * face_bounds.len() / LEAF_SIZE + 1);
        nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
        let mut stack = vec![(0usize, 0usize, face_bounds.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let bounds = order[lo..hi]
                .iter()
                .fold(Aabb::empty(), |b, &f| b.union(face_bounds[f as usize]));
            nodes[node].bounds = bounds;
            if hi - lo <= LEAF_SIZE {
                nodes[node].start = lo as u32;
                nodes[node].count = (hi - lo) as u32;
                continue;
            }
            let cbounds = Aabb::from_points(order[lo..hi].iter().map(|&f| centroids[f as usize]));
            let axis = cbounds.extent().max_axis();
            let mid = lo + (hi - lo) / 2;
            order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                let ca = centroids[a as usize][axis];
                let cb = centroids[b as usize][axis];
                ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
            nodes[node].start = left as u32;
            stack.push((left + 1, mid, hi));
            stack.push((left, lo, mid));
        }
        Self { nodes, order }
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes[0].bounds
    }

    /// Visits faces of every leaf whose box the ray interval `[t_min, t_max()]` reaches.
    ///
    /// `visit` receives face indices and returns the current upper bound on `t`,
    /// which lets first-hit queries shrink the search as they go.
    pub fn traverse_ray(
        &self,
        origin: Vec3<T>,
        dir: Vec3<T>,
        t_min: T,
        mut t_max: T,
        mut visit: impl FnMut(usize) -> T,
    ) {
        if self.order.is_empty() {
            return;
        }
        let inv = Vec3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z);
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.bounds.ray_interval(origin, inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &f in &self.order[s..s + node.count as usize] {
                    t_max = t_max.min(visit(f as usize));
                }
            } else {
                stack.push(node.start as usize + 1);
                stack.push(node.start as usize);
            }
        }
    }

    /// Calls `visit` on faces in leaves overlapping `query`; stops when it returns true.
    pub fn any_overlapping(&self, query: &Aabb<T>, mut visit: impl FnMut(usize) -> bool) -> bool {
        if self.order.is_empty() {
            return false;
        }
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &f in &self.order[s..s + node.count as usize] {
                    if visit(f as usize) {
                        return true;
                    }
                }
            } else {
                stack.push(node.start as usize + 1);
                stack.push(node.start as usize);
            }
        }
        false
    }
}
