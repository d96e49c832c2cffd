use crate::error::{Error, Result};
use crate::scalar::{argmax, Real};
use crate::se3::{pose_distance, MetricParams, Pose};

/// Greedy max–min selection of `k` indices, starting from `seed_index`.
///
/// Ties go to the lowest index, so the result is deterministic.
pub fn farthest_point_indices<T: Real>(
    set: &[Pose<T>],
    k: usize,
    params: &MetricParams<T>,
    seed_index: usize,
) -> Result<Vec<usize>> {
    if k == 0 || k > set.len() {
        return Err(Error::InvalidK { k, len: set.len() });
    }
    if seed_index >= set.len() {
        return Err(Error::InvalidParameter(format!(
            "seed index {seed_index} out of range for {} poses",
            set.len()
        )));
    }
    let seed = set[seed_index];
    let mut nearest: Vec<T> = set.iter().map(|g| pose_distance(g, &seed, params)).collect();
    let mut chosen = vec![false; set.len()];
    chosen[seed_index] = true;
    let mut selected = Vec::with_capacity(k);
    selected.push(seed_index);
    while selected.len() < k {
        let (next, _) = argmax(
            nearest
                .iter()
                .zip(&chosen)
                .map(|(&d, &c)| if c { T::neg_infinity() } else { d }),
        )
        .expect("set is non-empty");
        chosen[next] = true;
        selected.push(next);
        let new = set[next];
        for (d, g) in nearest.iter_mut().zip(set) {
            *d = d.min(pose_distance(g, &new, params));
        }
    }
    Ok(selected)
}

/// Poses chosen by [`farthest_point_indices`], in selection order.
pub fn farthest_point_subset<T: Real>(
    set: &[Pose<T>],
    k: usize,
    params: &MetricParams<T>,
    seed_index: usize,
) -> Result<Vec<Pose<T>>> {
    Ok(farthest_point_indices(set, k, params, seed_index)?
        .into_iter()
        .map(|i| set[i])
        .collect())
}
