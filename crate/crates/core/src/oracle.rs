//! Analytic grasp success oracle and exhaustive reference-set generation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gripper::{check_validity, close_fingers, GripperSpec};
use crate::mesh::TriMesh;
use crate::metrics::PoseIndex;
use crate::scalar::Real;
use crate::se3::{pose_distance, GridSpec, MetricParams, Pose, Se3Grid};

/// Bumped whenever labelling semantics change; stored with every reference set.
pub const ORACLE_VERSION: &str = "friction-cone-v1";

pub const DEFAULT_FRICTION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspLabel<T> {
    pub valid: bool,
    pub success: bool,
    pub jaw_width: Option<T>,
    /// `1 - worst contact angle / cone half-angle`, clamped to `[0, 1]`.
    pub quality: T,
}

impl<T: Real> GraspLabel<T> {
    pub fn invalid() -> Self {
        Self { valid: false, success: false, jaw_width: None, quality: T::zero() }
    }
}

/// Friction-cone test on the two contacts found by closing the fingers.
///
/// A contact passes when its outward normal lies within `atan(mu)` of the
/// direction opposing that finger's motion.
pub fn evaluate_grasp<T: Real>(mesh: &TriMesh<T>, pose: &Pose<T>, gripper: &GripperSpec<T>, mu: T) -> GraspLabel<T> {
    if !check_validity(mesh, pose, gripper).is_valid() {
        return GraspLabel::invalid();
    }
    let Some(contacts) = close_fingers(mesh, pose, gripper) else {
        return GraspLabel { valid: true, success: false, jaw_width: None, quality: T::zero() };
    };
    let (closing, _) = gripper.posed_axes(pose);
    // left finger moves along +closing, right along -closing
    let left = contacts.left.normal.dot(-closing).acos_clamped();
    let right = contacts.right.normal.dot(closing).acos_clamped();
    let worst = left.max(right);
    let cone = mu.atan();
    GraspLabel {
        valid: true,
        success: worst <= cone,
        jaw_width: Some(contacts.jaw_width),
        quality: (T::one() - worst / cone).max(T::zero()).min(T::one()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessDomain {
    /// Neighbourhood counted over valid grid poses only.
    ValidOnly,
    /// Neighbourhood counted over every enumerated grid pose.
    AllEnumerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrasp<T> {
    pub pose: Pose<T>,
    pub label: GraspLabel<T>,
    /// Position in the grid enumeration.
    pub grid_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceCounts {
    pub enumerated: u64,
    pub valid: u64,
    pub success: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessInfo<T> {
    pub eps: T,
    pub omega: T,
    pub domain: RobustnessDomain,
}

/// Valid grid poses of one object with their oracle labels.
#[derive(Debug, Clone)]
pub struct ReferenceSet<T> {
    pub object_id: String,
    pub grid: GridSpec<T>,
    pub gripper: GripperSpec<T>,
    pub friction: T,
    pub oracle_version: String,
    pub counts: ReferenceCounts,
    /// Valid grasps in grid order.
    pub grasps: Vec<ReferenceGrasp<T>>,
    /// Per-grasp robustness aligned with `grasps`; filled by [`label_robustness`].
    pub robustness: Option<Vec<T>>,
    pub robustness_info: Option<RobustnessInfo<T>>,
}

impl<T: Real> ReferenceSet<T> {
    pub fn successes(&self) -> impl Iterator<Item = &ReferenceGrasp<T>> {
        self.grasps.iter().filter(|g| g.label.success)
    }

    pub fn success_poses(&self) -> Vec<Pose<T>> {
        self.successes().map(|g| g.pose).collect()
    }

    pub fn valid_poses(&self) -> Vec<Pose<T>> {
        self.grasps.iter().map(|g| g.pose).collect()
    }
}

/// Labels every pose of the grid. Fails with [`Error::BudgetExceeded`] before any
/// work if the grid has more than `cap` poses.
pub fn generate_reference<T: Real>(
    object_id: &str,
    mesh: &TriMesh<T>,
    gripper: &GripperSpec<T>,
    grid: &GridSpec<T>,
    friction: T,
    cap: u64,
) -> Result<ReferenceSet<T>> {
    gripper.validate()?;
    if !(friction > T::zero()) {
        return Err(Error::InvalidParameter(format!("friction coefficient must be positive, got {friction}")));
    }
    let lattice = Se3Grid::new(*grid)?;
    let enumerated = lattice.len() as u64;
    if enumerated > cap {
        return Err(Error::BudgetExceeded { enumerated, cap });
    }
    let m = lattice.orientations().len();
    let (center, radius) = mesh.bounding_sphere();
    let reach = radius + gripper.reach();
    let per_node: Vec<Vec<ReferenceGrasp<T>>> = (0..lattice.translation_count())
        .into_par_iter()
        .map(|node| {
            let p = lattice.translation(node);
            if p.distance(center) > reach {
                return Vec::new();
            }
            lattice
                .orientations()
                .iter()
                .enumerate()
                .filter_map(|(k, &q)| {
                    // grid orientations are already unit and canonical; keep them bit-exact
                    let pose = Pose { p, q };
                    let label = evaluate_grasp(mesh, &pose, gripper, friction);
                    label.valid.then_some(ReferenceGrasp { pose, label, grid_index: (node * m + k) as u64 })
                })
                .collect()
        })
        .collect();
    let grasps: Vec<ReferenceGrasp<T>> = per_node.into_iter().flatten().collect();
    let success = grasps.iter().filter(|g| g.label.success).count() as u64;
    log::info!("{object_id}: {enumerated} enumerated, {} valid, {success} successful", grasps.len());
    Ok(ReferenceSet {
        object_id: object_id.to_string(),
        grid: *grid,
        gripper: *gripper,
        friction,
        oracle_version: ORACLE_VERSION.to_string(),
        counts: ReferenceCounts { enumerated, valid: grasps.len() as u64, success },
        grasps,
        robustness: None,
        robustness_info: None,
    })
}

/// Fraction of neighbours within `eps` that are successful, for every grasp.
///
/// The neighbourhood includes the grasp itself. With
/// [`RobustnessDomain::AllEnumerated`] the denominator counts invalid grid
/// poses too, enumerated directly from the grid.
pub fn label_robustness<T: Real>(
    reference: &mut ReferenceSet<T>,
    eps: T,
    params: &MetricParams<T>,
    domain: RobustnessDomain,
) -> Result<()> {
    if !(eps >= T::zero()) {
        return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
    }
    if reference.grasps.is_empty() {
        reference.robustness = Some(Vec::new());
        reference.robustness_info = Some(RobustnessInfo { eps, omega: params.omega, domain });
        return Ok(());
    }
    let valid = PoseIndex::build(&reference.valid_poses(), *params)?;
    let lattice = match domain {
        RobustnessDomain::ValidOnly => None,
        RobustnessDomain::AllEnumerated => Some(Se3Grid::new(reference.grid)?),
    };
    let orientation_index = match &lattice {
        Some(l) => {
            let rots: Vec<Pose<T>> = l.orientations().iter().map(|&q| Pose { p: crate::linalg::Vec3::zero(), q }).collect();
            Some(PoseIndex::build(&rots, *params)?)
        }
        None => None,
    };
    let grasps = &reference.grasps;
    let scores: Vec<T> = grasps
        .par_iter()
        .map(|g| {
            let hits = valid.within(&g.pose, eps);
            let good = hits.iter().filter(|(j, _)| grasps[*j].label.success).count();
            let total = match (&lattice, &orientation_index) {
                (Some(l), Some(oi)) => count_grid_neighbours(l, oi, g, eps, params),
                _ => hits.len(),
            };
            T::lit(good as f64) / T::lit(total.max(1) as f64)
        })
        .collect();
    reference.robustness = Some(scores);
    reference.robustness_info = Some(RobustnessInfo { eps, omega: params.omega, domain });
    Ok(())
}

/// Grid poses within `eps` of a grid grasp, counted without enumerating the grid.
fn count_grid_neighbours<T: Real>(
    lattice: &Se3Grid<T>,
    orientations: &PoseIndex<T>,
    g: &ReferenceGrasp<T>,
    eps: T,
    params: &MetricParams<T>,
) -> usize {
    let m = lattice.orientations().len();
    let node = g.grid_index as usize / m;
    let counts = lattice.lattice_counts();
    let [nx, ny, _] = counts;
    let coords = [node % nx, (node / nx) % ny, node / (nx * ny)];
    let step = lattice.spec().translation_step;
    let mut total = 0;
    for (k, rot) in orientations.within(&Pose { p: crate::linalg::Vec3::zero(), q: g.pose.q }, eps) {
        let budget = (eps - rot) / params.omega;
        let reach = (budget / step).floor().to_i64().unwrap_or(0).max(0);
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let c = [coords[0] as i64 + dx, coords[1] as i64 + dy, coords[2] as i64 + dz];
                    if (0..3).any(|a| c[a] < 0 || c[a] >= counts[a] as i64) {
                        continue;
                    }
                    let other = (c[0] as usize + nx * (c[1] as usize + ny * c[2] as usize)) * m + k;
                    if pose_distance(&g.pose, &lattice.pose(other), params) <= eps {
                        total += 1;
                    }
                }
            }
        }
    }
    total
}
