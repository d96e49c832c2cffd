use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] grasp_core::Error),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed file {}: {message}", .path.display())]
    Format { path: PathBuf, message: String },
    #[error("reference for {object} was built from different inputs (expected key {expected}, file has {found}); rerun `reference`")]
    ReferenceMismatch { object: String, expected: String, found: String },
    #[error("robust set at gamma = {gamma} is empty")]
    EmptyRobustSet { gamma: f64 },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| PipelineError::Io { path, source }
    }

    /// 1 validation, 2 runtime, 3 budget exceeded.
    pub fn exit_code(&self) -> i32 {
        use grasp_core::Error as E;
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Core(E::BudgetExceeded { .. }) => 3,
            PipelineError::Core(
                E::FileNotFound(_)
                | E::Parse { .. }
                | E::UnsupportedFormat(_)
                | E::EmptyMesh
                | E::InvalidStep(_)
                | E::InvalidGrid(_)
                | E::InvalidParameter(_)
                | E::InvalidK { .. },
            ) => 1,
            _ => 2,
        }
    }
}
