//! Run manifest, rewritten atomically at the end of every stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use grasp_core::oracle::{ReferenceCounts, ORACLE_VERSION};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::util::{read_json, write_json_atomic};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectStage {
    pub counts: ReferenceCounts,
    pub reference_ms: u64,
    /// Reused from an earlier run via `--resume`.
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStage {
    pub wall_ms: u64,
    pub objects: BTreeMap<String, ObjectStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateStage {
    pub wall_ms: u64,
    pub cells: usize,
    pub cells_resumed: usize,
    /// Cells that stopped at the attempt cap before the final checkpoint.
    pub cells_exhausted: usize,
    /// Rows holding at least one undefined value.
    pub undefined_rows: usize,
    pub object_counts: BTreeMap<String, ReferenceCounts>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub toolkit: String,
    pub toolkit_version: String,
    pub oracle_version: String,
    /// How aggregate rows are formed.
    pub aggregation: String,
    pub config: RunConfig,
    pub reference: Option<ReferenceStage>,
    pub evaluate: Option<EvaluateStage>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            config_hash: config.hash(),
            toolkit: env!("CARGO_PKG_NAME").into(),
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
            oracle_version: ORACLE_VERSION.into(),
            aggregation: "mean and population std over every (object, seed) cell at equal n_valid checkpoints; \
                          no interpolation; undefined values skipped"
                .into(),
            config: config.clone(),
            reference: None,
            evaluate: None,
        }
    }

    /// The manifest in `out_dir` if it belongs to the same config, else a fresh one.
    pub fn load_or_new(out_dir: &Path, config: &RunConfig) -> Self {
        match read_json::<RunManifest>(&out_dir.join(FILE_NAME)) {
            Ok(m) if m.config_hash == config.hash() => m,
            _ => Self::new(config),
        }
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        write_json_atomic(&out_dir.join(FILE_NAME), self)
    }
}
