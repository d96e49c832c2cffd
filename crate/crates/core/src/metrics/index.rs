//! Exact nearest-neighbour and range search under the weighted pose distance.
//!
//! Poses are embedded as `(omega * p, q)` in R⁷ and stored in a k-d tree with
//! per-node bounding boxes. The quaternion sign of stored and query poses is
//! irrelevant because pruning uses a lower bound valid for both signs: the chord distance `c` between unit quaternions gives the
//! angle `2 asin(c / 2)`, and the rotation term is the smaller of the angles to
//! `q` and `-q`. Candidate distances are always evaluated with
//! [`pose_distance`], so results equal a linear scan.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::se3::{pose_distance, MetricParams, Pose};

const LEAF_SIZE: usize = 8;
const DIMS: usize = 7;

#[derive(Debug, Clone)]
struct Node<T> {
    lo: [T; DIMS],
    hi: [T; DIMS],
    /// Leaf: start into `order`. Interior: left child index (right = left + 1).
    start: u32,
    count: u32,
}

#[derive(Debug, Clone)]
pub struct PoseIndex<T> {
    poses: Vec<Pose<T>>,
    points: Vec<[T; DIMS]>,
    order: Vec<u32>,
    nodes: Vec<Node<T>>,
    params: MetricParams<T>,
}

fn embed<T: Real>(pose: &Pose<T>, omega: T) -> [T; DIMS] {
    [
        pose.p.x * omega,
        pose.p.y * omega,
        pose.p.z * omega,
        pose.q.w,
        pose.q.x,
        pose.q.y,
        pose.q.z,
    ]
}

impl<T: Real> PoseIndex<T> {
    pub fn build(poses: &[Pose<T>], params: MetricParams<T>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::EmptyInput);
        }
        let poses = poses.to_vec();
        let points: Vec<[T; DIMS]> = poses.iter().map(|p| embed(p, params.omega)).collect();
        let mut order: Vec<u32> = (0..poses.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * poses.len() / LEAF_SIZE + 1);
        let empty = Node { lo: [T::zero(); DIMS], hi: [T::zero(); DIMS], start: 0, count: 0 };
        nodes.push(empty.clone());
        let mut stack = vec![(0usize, 0usize, poses.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let mut bmin = [T::infinity(); DIMS];
            let mut bmax = [T::neg_infinity(); DIMS];
            for &i in &order[lo..hi] {
                let p = &points[i as usize];
                for d in 0..DIMS {
                    bmin[d] = bmin[d].min(p[d]);
                    bmax[d] = bmax[d].max(p[d]);
                }
            }
            nodes[node].lo = bmin;
            nodes[node].hi = bmax;
            if hi - lo <= LEAF_SIZE {
                nodes[node].start = lo as u32;
                nodes[node].count = (hi - lo) as u32;
                continue;
            }
            let axis = (0..DIMS)
                .max_by(|&a, &b| {
                    let sa = bmax[a] - bmin[a];
                    let sb = bmax[b] - bmin[b];
                    sa.partial_cmp(&sb).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            let mid = lo + (hi - lo) / 2;
            order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                points[a as usize][axis]
                    .partial_cmp(&points[b as usize][axis])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(empty.clone());
            nodes.push(empty.clone());
            nodes[node].start = left as u32;
            stack.push((left + 1, mid, hi));
            stack.push((left, lo, mid));
        }
        Ok(Self { poses, points, order, nodes, params })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn params(&self) -> &MetricParams<T> {
        &self.params
    }

    /// Stored poses, in input order.
    pub fn poses(&self) -> &[Pose<T>] {
        &self.poses
    }

    /// Lower bound on the distance from the query to any pose in `node`.
    #[inline]
    fn lower_bound(&self, node: &Node<T>, query: &[T; DIMS]) -> T {
        let mut trans = T::zero();
        for d in 0..3 {
            let v = query[d];
            let gap = (node.lo[d] - v).max(v - node.hi[d]).max(T::zero());
            trans = trans + gap * gap;
        }
        let mut pos = T::zero();
        let mut neg = T::zero();
        for d in 3..DIMS {
            let v = query[d];
            let gap = (node.lo[d] - v).max(v - node.hi[d]).max(T::zero());
            pos = pos + gap * gap;
            let gap = (node.lo[d] + v).max(-v - node.hi[d]).max(T::zero());
            neg = neg + gap * gap;
        }
        let chord = pos.min(neg).sqrt();
        let rot = T::two() * (chord * T::half()).min(T::one()).asin();
        // slack keeps rounding in the bound from pruning exact ties
        (trans.sqrt() + rot) * T::lit(1.0 - 1e-9)
    }

    /// Nearest stored pose and its distance; ties resolve to the lowest index.
    pub fn nearest(&self, query: &Pose<T>) -> (usize, T) {
        let e = embed(query, self.params.omega);
        let mut best = (usize::MAX, T::infinity());
        let mut stack: Vec<(usize, T)> = Vec::with_capacity(64);
        stack.push((0, T::zero()));
        while let Some((i, bound)) = stack.pop() {
            if bound > best.1 {
                continue;
            }
            let node = &self.nodes[i];
            if node.count > 0 {
                let s = node.start as usize;
                for &j in &self.order[s..s + node.count as usize] {
                    let j = j as usize;
                    let d = pose_distance(query, &self.poses[j], &self.params);
                    if d < best.1 || (d == best.1 && j < best.0) {
                        best = (j, d);
                    }
                }
            } else {
                let l = node.start as usize;
                let bl = self.lower_bound(&self.nodes[l], &e);
                let br = self.lower_bound(&self.nodes[l + 1], &e);
                // push the farther child first so the nearer one is expanded next
                if bl <= br {
                    stack.push((l + 1, br));
                    stack.push((l, bl));
                } else {
                    stack.push((l, bl));
                    stack.push((l + 1, br));
                }
            }
        }
        best
    }

    /// All stored poses within `radius` (inclusive), sorted by index.
    pub fn within(&self, query: &Pose<T>, radius: T) -> Vec<(usize, T)> {
        let e = embed(query, self.params.omega);
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if self.lower_bound(node, &e) > radius {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &j in &self.order[s..s + node.count as usize] {
                    let j = j as usize;
                    let d = pose_distance(query, &self.poses[j], &self.params);
                    if d <= radius {
                        out.push((j, d));
                    }
                }
            } else {
                stack.push(node.start as usize + 1);
                stack.push(node.start as usize);
            }
        }
        out.sort_unstable_by_key(|&(j, _)| j);
        out
    }

    /// Distance from each query to its nearest stored pose, in query order.
    pub fn nearest_distances(&self, queries: &[Pose<T>]) -> Vec<T> {
        queries.par_iter().map(|q| self.nearest(q).1).collect()
    }

    #[doc(hidden)]
    pub fn embedding(&self, i: usize) -> [T; DIMS] {
        self.points[i]
    }
}
