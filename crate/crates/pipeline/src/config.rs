//! Run configuration: one schema, read from TOML or JSON.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use grasp_core::metrics::PrecisionDenominator;
use grasp_core::oracle::{RobustnessDomain, DEFAULT_FRICTION};
use grasp_core::samplers::{SamplerKind, SamplerSpec};
use grasp_core::{Aabb, GripperSpec, MetricParams};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    /// Used in file names and report rows.
    pub id: String,
    /// OBJ or STL; relative paths resolve against the config file's directory.
    pub path: PathBuf,
    /// Factor taking file units to millimetres.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// mm
    pub translation_step: f64,
    /// degrees
    pub rotation_step: f64,
    /// Fixed grid bounds in mm. Default: the object's AABB dilated by the gripper reach.
    #[serde(default)]
    pub bounds: Option<Aabb>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { translation_step: 10.0, rotation_step: 30.0, bounds: None }
    }
}

/// An angle in radians, written as a number or as `pi`, `pi/6`, `2pi/3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angle(pub f64);

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Angle(x)),
            Raw::Text(t) => parse_angle(&t).map(Angle).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse angle {text:?} (expected e.g. 0.5, pi, pi/6, 2pi/3)");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some("") => PI,
        Some(k) => k.parse::<f64>().map_err(|_| bad())? * PI,
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(value / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    #[serde(default)]
    pub alpha: Angle,
    #[serde(default)]
    pub beta: Angle,
    #[serde(default)]
    pub s_min: f64,
}

impl SamplerConfig {
    pub fn spec(&self, seed: u64) -> SamplerSpec<f64> {
        SamplerSpec { kind: self.kind, alpha: self.alpha.0, beta: self.beta.0, s_min: self.s_min, seed }
    }

    pub fn label(&self) -> String {
        self.spec(0).label()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Neighbourhood radius for robustness labels.
    pub eps: f64,
    pub domain: RobustnessDomain,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { eps: 0.109, domain: RobustnessDomain::ValidOnly }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Largest grid a reference run may enumerate.
    pub reference_poses: u64,
    /// Attempts per cell; default `max(1e6, 1000 * final checkpoint)`.
    #[serde(default)]
    pub attempts: Option<usize>,
}

impl Default for Caps {
    fn default() -> Self {
        Self { reference_poses: 50_000_000, attempts: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub objects: Vec<ObjectConfig>,
    #[serde(default)]
    pub gripper: GripperSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub metric: MetricParams,
    #[serde(default = "default_friction")]
    pub friction: f64,
    #[serde(default)]
    pub robustness: RobustnessConfig,
    pub samplers: Vec<SamplerConfig>,
    /// Spacing of line-sampler points; default the grid translation step.
    #[serde(default)]
    pub line_spacing: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Robustness thresholds for the robust-reference rows.
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_precision")]
    pub precision_denominator: Denominator,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub caps: Caps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    Valid,
    Attempts,
}

impl Denominator {
    pub fn for_attempts(self, attempts: u64) -> PrecisionDenominator {
        match self {
            Denominator::Valid => PrecisionDenominator::Valid,
            Denominator::Attempts => PrecisionDenominator::Attempts(attempts),
        }
    }
}

fn default_friction() -> f64 {
    DEFAULT_FRICTION
}
fn default_eps() -> Vec<f64> {
    vec![0.05, 0.109, 0.2]
}
fn default_checkpoints() -> Vec<usize> {
    vec![100, 1_000, 10_000, 100_000]
}
fn default_precision() -> Denominator {
    Denominator::Valid
}
fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

/// Flags that replace config values before validation and hashing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub eps: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
}

/// A validated configuration with resolved mesh paths.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Directory relative mesh paths resolve against.
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str, format: Format) -> Result<Self> {
        match format {
            Format::Toml => toml::from_str(text).map_err(|e| PipelineError::Validation(format!("config: {e}"))),
            Format::Json => serde_json::from_str(text).map_err(|e| PipelineError::Validation(format!("config: {e}"))),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out_dir {
            self.out_dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(eps) = &o.eps {
            self.eps = eps.clone();
        }
        if let Some(gamma) = &o.gamma {
            self.gamma = gamma.clone();
        }
    }

    /// Checks every field and that every mesh file exists.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Validation(m));
        if self.objects.is_empty() {
            return fail("no objects configured".into());
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if o.id.is_empty() || !o.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return fail(format!("object id {:?} must be non-empty and use only [A-Za-z0-9._-]", o.id));
            }
            if !ids.insert(&o.id) {
                return fail(format!("duplicate object id {:?}", o.id));
            }
            if !(o.scale > 0.0 && o.scale.is_finite()) {
                return fail(format!("object {:?}: scale must be positive", o.id));
            }
            let path = base_dir.join(&o.path);
            if !path.is_file() {
                return fail(format!("object {:?}: mesh file not found: {}", o.id, path.display()));
            }
        }
        self.gripper.validate().map_err(|e| PipelineError::Validation(format!("gripper: {e}")))?;
        let g = &self.grid;
        if !(g.translation_step > 0.0 && g.translation_step.is_finite()) {
            return fail(format!("grid translation_step must be positive, got {}", g.translation_step));
        }
        if !(g.rotation_step > 0.0 && g.rotation_step <= 180.0) {
            return fail(format!("grid rotation_step must lie in (0, 180], got {}", g.rotation_step));
        }
        if g.bounds.is_some_and(|b| b.is_empty()) {
            return fail("grid bounds are empty".into());
        }
        MetricParams::new(self.metric.omega).map_err(|e| PipelineError::Validation(format!("metric: {e}")))?;
        if !(self.friction > 0.0 && self.friction.is_finite()) {
            return fail(format!("friction must be positive, got {}", self.friction));
        }
        if !(self.robustness.eps >= 0.0 && self.robustness.eps.is_finite()) {
            return fail(format!("robustness eps must be non-negative, got {}", self.robustness.eps));
        }
        if self.samplers.is_empty() {
            return fail("no samplers configured".into());
        }
        let mut labels = BTreeSet::new();
        for s in &self.samplers {
            s.spec(0).validate().map_err(|e| PipelineError::Validation(format!("sampler {}: {e}", s.label())))?;
            if !labels.insert(file_stem(&s.label())) {
                return fail(format!("duplicate sampler {}", s.label()));
            }
        }
        if self.line_spacing.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
            return fail("line_spacing must be positive".into());
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return fail(format!("eps must be a non-empty list of non-negative values, got {:?}", self.eps));
        }
        if self.gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return fail(format!("gamma values must lie in [0, 1], got {:?}", self.gamma));
        }
        if self.checkpoints.is_empty() || self.checkpoints[0] == 0 || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("checkpoints must be positive and strictly increasing, got {:?}", self.checkpoints));
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return fail(format!("duplicate seeds in {:?}", self.seeds));
        }
        if self.caps.reference_poses == 0 || self.caps.attempts == Some(0) {
            return fail("caps must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serialises").as_bytes())
    }

    pub fn line_spacing(&self) -> f64 {
        self.line_spacing.unwrap_or(self.grid.translation_step)
    }

    pub fn attempt_cap(&self) -> usize {
        let last = *self.checkpoints.last().expect("validated");
        self.caps.attempts.unwrap_or_else(|| grasp_core::samplers::attempt_budget(last))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("toml") => Ok(Format::Toml),
            Some("json") => Ok(Format::Json),
            _ => Err(PipelineError::Validation(format!("config {} must end in .toml or .json", path.display()))),
        }
    }
}

/// Reads, overrides and validates a config file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig> {
    let format = Format::from_path(path)?;
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = RunConfig::parse(&text, format)?;
    config.apply(overrides);
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config.validate(&base_dir)?;
    Ok(LoadedConfig { config, base_dir })
}

impl LoadedConfig {
    pub fn mesh_path(&self, object: &ObjectConfig) -> PathBuf {
        self.base_dir.join(&object.path)
    }
}

/// File-name form of a sampler label: `antipodal(pi/6,0)` becomes `antipodal_pi-6_0`.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .filter(|&c| c != ')')
        .map(|c| match c {
            '(' | ',' => '_',
            '/' => '-',
            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' => c,
            _ => '_',
        })
        .collect()
}
