use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("failed to parse mesh {}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
    #[error("unsupported mesh format: {}", .0.display())]
    UnsupportedFormat(PathBuf),
    #[error("mesh has no non-degenerate faces")]
    EmptyMesh,
    #[error("invalid rotation step {0} degrees (expected 0 < step <= 180)")]
    InvalidStep(f64),
    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),
    #[error("invalid subset size k = {k} for a set of {len} elements")]
    InvalidK { k: usize, len: usize },
    #[error("empty input set")]
    EmptyInput,
    #[error("empty reference set")]
    EmptyReference,
    #[error("no valid samples")]
    NoValidSamples,
    #[error("reference set carries no robustness labels")]
    MissingRobustness,
    #[error("enumeration budget exceeded: {enumerated} poses > cap {cap}")]
    BudgetExceeded { enumerated: u64, cap: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
