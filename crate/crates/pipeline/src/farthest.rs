//! Diverse robust grasps by farthest-point selection over a reference file.

use std::path::{Path, PathBuf};

use grasp_core::metrics::robust_indices;
use grasp_core::se3::{farthest_point_indices, pose_distance};
use grasp_core::{MetricParams, Pose};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::refio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedGrasp {
    pub rank: usize,
    pub grid_index: u64,
    /// `[px, py, pz, qw, qx, qy, qz]`, mm.
    pub pose: [f64; 7],
    pub robustness: f64,
    /// Distance to the closest earlier selection when chosen; `None` for the first.
    pub selection_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarthestOutput {
    pub reference: PathBuf,
    pub object_id: String,
    pub gamma: f64,
    pub k: usize,
    pub omega: f64,
    /// Size of the robust set the selection was drawn from.
    pub robust_set_size: usize,
    pub grasps: Vec<SelectedGrasp>,
}

/// Selects `k` grasps from the `gamma`-robust successes of a reference file,
/// starting from the robust grasp at `seed_index` (in grid order).
pub fn cmd_farthest(path: &Path, k: usize, gamma: f64, seed_index: usize) -> Result<FarthestOutput> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(PipelineError::Validation(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let (reference, _) = refio::read(path)?;
    let info = reference.robustness_info.ok_or(grasp_core::Error::MissingRobustness)?;
    let params = MetricParams::new(info.omega)?;
    let robust = robust_indices(&reference, gamma)?;
    if robust.is_empty() {
        return Err(PipelineError::EmptyRobustSet { gamma });
    }
    let scores = reference.robustness.as_ref().expect("robustness present with info");
    let poses: Vec<Pose> = robust.iter().map(|&i| reference.grasps[i].pose).collect();
    let chosen = farthest_point_indices(&poses, k, &params, seed_index)?;
    let grasps = chosen
        .iter()
        .enumerate()
        .map(|(rank, &j)| {
            let earlier = &chosen[..rank];
            let selection_distance =
                earlier.iter().map(|&e| pose_distance(&poses[j], &poses[e], &params)).reduce(f64::min);
            let i = robust[j];
            SelectedGrasp {
                rank,
                grid_index: reference.grasps[i].grid_index,
                pose: poses[j].to_f64_array(),
                robustness: scores[i],
                selection_distance,
            }
        })
        .collect();
    Ok(FarthestOutput {
        reference: path.to_path_buf(),
        object_id: reference.object_id,
        gamma,
        k,
        omega: info.omega,
        robust_set_size: robust.len(),
        grasps,
    })
}
