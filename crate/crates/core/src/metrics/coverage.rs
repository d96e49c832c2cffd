use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PoseIndex;
use crate::oracle::GraspLabel;
use crate::scalar::Real;
use crate::se3::{MetricParams, Pose};

/// Distance from every reference pose to its nearest sample.
///
/// All three coverage scores derive from this array, so one nearest-neighbour
/// pass serves every `eps` and every filtered subset of the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestDistances<T>(pub Vec<T>);

impl<T: Real> NearestDistances<T> {
    pub fn compute(samples: &PoseIndex<T>, reference: &[Pose<T>]) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::EmptyReference);
        }
        Ok(Self(reference.par_iter().map(|r| samples.nearest(r).1).collect()))
    }

    /// Restricts to the given reference positions.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fraction of reference poses with a sample within `eps`.
    pub fn cov1(&self, eps: T) -> Result<T> {
        if self.0.is_empty() {
            return Err(Error::EmptyReference);
        }
        let hit = self.0.iter().filter(|&&d| d <= eps).count();
        Ok(T::lit(hit as f64) / T::lit(self.0.len() as f64))
    }

    /// `exp(-max distance)`: worst-case coverage.
    pub fn cov2(&self) -> Result<T> {
        let worst = self.0.iter().copied().reduce(T::max).ok_or(Error::EmptyInput)?;
        Ok((-worst).exp())
    }

    /// `exp(-mean distance)`.
    pub fn cov3(&self) -> Result<T> {
        if self.0.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mean = self.0.iter().map(|d| d.as_f64()).sum::<f64>() / self.0.len() as f64;
        Ok(T::lit(-mean).exp())
    }
}

/// `(cov1 at each eps, cov2, cov3)` of `samples` against `reference`.
///
/// An empty sample set has zero coverage; an empty reference is an error.
pub fn coverage<T: Real>(
    samples: &[Pose<T>],
    reference: &[Pose<T>],
    eps: &[T],
    params: &MetricParams<T>,
) -> Result<(Vec<T>, T, T)> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if samples.is_empty() {
        return Ok((vec![T::zero(); eps.len()], T::zero(), T::zero()));
    }
    let index = PoseIndex::build(samples, *params)?;
    let d = NearestDistances::compute(&index, reference)?;
    let cov1 = eps.iter().map(|&e| d.cov1(e)).collect::<Result<Vec<_>>>()?;
    Ok((cov1, d.cov2()?, d.cov3()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionDenominator {
    /// Successes over valid samples.
    Valid,
    /// Successes over every sampler attempt.
    Attempts(u64),
}

/// Successful fraction of the valid samples.
pub fn precision<T: Real>(labels: &[GraspLabel<T>]) -> Result<f64> {
    precision_with(labels, PrecisionDenominator::Valid)
}

pub fn precision_with<T: Real>(labels: &[GraspLabel<T>], denominator: PrecisionDenominator) -> Result<f64> {
    let valid = labels.iter().filter(|l| l.valid).count() as u64;
    let success = labels.iter().filter(|l| l.valid && l.success).count() as u64;
    let total = match denominator {
        PrecisionDenominator::Valid => valid,
        PrecisionDenominator::Attempts(n) => n,
    };
    if valid == 0 || total == 0 {
        return Err(Error::NoValidSamples);
    }
    Ok(success as f64 / total as f64)
}
