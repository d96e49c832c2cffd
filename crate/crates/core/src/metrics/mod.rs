//! Coverage, precision and robust-coverage metrics over pose sets.

mod coverage;
mod index;
mod robust;

pub use coverage::{coverage, precision, precision_with, NearestDistances, PrecisionDenominator};
pub use index::PoseIndex;
pub use robust::{robust_coverage, robust_filter, robust_indices};
