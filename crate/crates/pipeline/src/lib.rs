//! Configuration, orchestration and persistence for grasp-sampler benchmark runs.
//!
//! The `graspbench` binary wraps [`run::cmd_reference`], [`run::cmd_evaluate`]
//! and [`farthest::cmd_farthest`].

pub mod config;
pub mod error;
pub mod farthest;
pub mod manifest;
pub mod refio;
pub mod report;
pub mod run;
pub mod util;

pub use error::{PipelineError, Result};
