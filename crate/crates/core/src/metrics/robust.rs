use crate::error::{Error, Result};
use crate::metrics::{NearestDistances, PoseIndex};
use crate::oracle::ReferenceSet;
use crate::scalar::Real;
use crate::se3::{MetricParams, Pose};

/// Positions in `reference.grasps` of successes with robustness at least `gamma`.
pub fn robust_indices<T: Real>(reference: &ReferenceSet<T>, gamma: T) -> Result<Vec<usize>> {
    let scores = reference.robustness.as_ref().ok_or(Error::MissingRobustness)?;
    Ok(reference
        .grasps
        .iter()
        .zip(scores)
        .enumerate()
        .filter(|(_, (g, &s))| g.label.success && s >= gamma)
        .map(|(i, _)| i)
        .collect())
}

pub fn robust_filter<T: Real>(reference: &ReferenceSet<T>, gamma: T) -> Result<Vec<Pose<T>>> {
    Ok(robust_indices(reference, gamma)?.into_iter().map(|i| reference.grasps[i].pose).collect())
}

/// `cov1` of the first `count` samples against the `gamma`-robust successes.
pub fn robust_coverage<T: Real>(
    samples: &[Pose<T>],
    count: usize,
    reference: &ReferenceSet<T>,
    eps: T,
    gamma: T,
    params: &MetricParams<T>,
) -> Result<T> {
    let robust = robust_filter(reference, gamma)?;
    if robust.is_empty() {
        return Err(Error::EmptyReference);
    }
    let prefix = &samples[..count.min(samples.len())];
    if prefix.is_empty() {
        return Ok(T::zero());
    }
    let index = PoseIndex::build(prefix, *params)?;
    NearestDistances::compute(&index, &robust)?.cov1(eps)
}
