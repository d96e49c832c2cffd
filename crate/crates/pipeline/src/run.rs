//! Stage orchestration: reference generation and sampler evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use grasp_core::mesh::load_mesh_scaled;
use grasp_core::metrics::{precision_with, robust_indices, NearestDistances, PoseIndex};
use grasp_core::oracle::{evaluate_grasp, generate_reference, label_robustness, ReferenceCounts, ORACLE_VERSION};
use grasp_core::samplers::{sampling_bounds, Sampler};
use grasp_core::se3::Se3Grid;
use grasp_core::{GridSpec, MetricParams, Pose, ReferenceSet, TriMesh};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{file_stem, LoadedConfig, ObjectConfig, RunConfig, SamplerConfig};
use crate::error::{PipelineError, Result};
use crate::manifest::{EvaluateStage, ObjectStage, ReferenceStage, RunManifest};
use crate::refio::{self, MeshInfo, ReferenceSidecar, RobustSetSize};
use crate::report::{self, ReportRow, AGGREGATE_COLUMNS, COLUMNS};
use crate::util::{read_json, sha256_file, write_json_atomic};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const PRECISION_FILE: &str = "precision_table.csv";
pub const PRECISION_MARKDOWN: &str = "precision_table.md";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    pub resume: bool,
    /// Where `evaluate` reads references; default `<out>/reference`.
    pub reference_dir: Option<PathBuf>,
}

pub fn reference_dir(config: &RunConfig) -> PathBuf {
    config.out_dir.join("reference")
}

pub fn cells_dir(config: &RunConfig) -> PathBuf {
    config.out_dir.join("cells")
}

pub fn cell_paths(config: &RunConfig, object_id: &str, sampler: &SamplerConfig, seed: u64) -> (PathBuf, PathBuf) {
    let dir = cells_dir(config).join(object_id);
    let stem = format!("{}.seed{seed}", file_stem(&sampler.label()));
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

fn in_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| PipelineError::Validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn millis(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// A loaded mesh and the hash of its file.
pub struct ObjectMesh {
    pub mesh: TriMesh,
    pub info: MeshInfo,
}

pub fn load_object(loaded: &LoadedConfig, object: &ObjectConfig) -> Result<ObjectMesh> {
    let path = loaded.mesh_path(object);
    let mesh = load_mesh_scaled(&path, object.scale)?;
    let info = MeshInfo {
        path: object.path.clone(),
        sha256: sha256_file(&path)?,
        scale: object.scale,
        faces: mesh.faces().len(),
        watertight: mesh.is_watertight(),
    };
    Ok(ObjectMesh { mesh, info })
}

pub fn grid_spec(config: &RunConfig, mesh: &TriMesh) -> GridSpec {
    GridSpec {
        translation_step: config.grid.translation_step,
        rotation_step: config.grid.rotation_step,
        bounds: config.grid.bounds.unwrap_or_else(|| sampling_bounds(mesh, &config.gripper)),
    }
}

/// Hash of everything a reference file depends on.
pub fn reference_key(config: &RunConfig, object: &ObjectConfig, mesh: &ObjectMesh) -> [u8; 32] {
    #[derive(Serialize)]
    struct KeyInputs<'a> {
        format_version: u32,
        oracle_version: &'a str,
        object_id: &'a str,
        mesh_sha256: &'a str,
        scale: f64,
        grid: GridSpec,
        gripper: &'a grasp_core::GripperSpec,
        friction: f64,
        robustness: &'a crate::config::RobustnessConfig,
        metric: MetricParams,
    }
    let inputs = KeyInputs {
        format_version: refio::FORMAT_VERSION,
        oracle_version: ORACLE_VERSION,
        object_id: &object.id,
        mesh_sha256: &mesh.info.sha256,
        scale: object.scale,
        grid: grid_spec(config, &mesh.mesh),
        gripper: &config.gripper,
        friction: config.friction,
        robustness: &config.robustness,
        metric: config.metric,
    };
    Sha256::digest(serde_json::to_vec(&inputs).expect("serialisable")).into()
}

fn reusable_reference(dir: &Path, object_id: &str, key: &[u8; 32]) -> Option<ReferenceSidecar> {
    let sidecar: ReferenceSidecar = read_json(&refio::sidecar_path(dir, object_id)).ok()?;
    let file_ok = sha256_file(&refio::binary_path(dir, object_id)).ok()? == sidecar.file_sha256;
    (file_ok && sidecar.key == hex::encode(key)).then_some(sidecar)
}

/// Generates, labels and writes one reference file per object.
pub fn cmd_reference(loaded: &LoadedConfig, options: &RunOptions) -> Result<ReferenceStage> {
    let config = &loaded.config;
    let start = Instant::now();
    let dir = reference_dir(config);
    let meshes: Vec<ObjectMesh> = config.objects.iter().map(|o| load_object(loaded, o)).collect::<Result<_>>()?;
    // fail on the grid budget before spending time on any object
    for (object, m) in config.objects.iter().zip(&meshes) {
        let n = Se3Grid::new(grid_spec(config, &m.mesh))?.len() as u64;
        if n > config.caps.reference_poses {
            log::error!("{}: grid has {n} poses, cap is {}", object.id, config.caps.reference_poses);
            return Err(grasp_core::Error::BudgetExceeded { enumerated: n, cap: config.caps.reference_poses }.into());
        }
    }
    let mut objects = BTreeMap::new();
    for (object, m) in config.objects.iter().zip(&meshes) {
        let t = Instant::now();
        let key = reference_key(config, object, m);
        if options.resume {
            if let Some(sidecar) = reusable_reference(&dir, &object.id, &key) {
                log::info!("{}: reference up to date, skipped", object.id);
                objects.insert(object.id.clone(), ObjectStage { counts: sidecar.counts, reference_ms: 0, resumed: true });
                continue;
            }
        }
        let grid = grid_spec(config, &m.mesh);
        let reference = in_pool(options.jobs, || -> Result<ReferenceSet> {
            let mut r = generate_reference(
                &object.id,
                &m.mesh,
                &config.gripper,
                &grid,
                config.friction,
                config.caps.reference_poses,
            )?;
            label_robustness(&mut r, config.robustness.eps, &config.metric, config.robustness.domain)?;
            Ok(r)
        })??;
        // sizes as evaluate will see them, i.e. after the f32 round trip
        let stored = refio::decode(&refio::encode(&reference, &key), Path::new(&object.id))?.0;
        let robust_set_sizes = config
            .gamma
            .iter()
            .map(|&gamma| Ok(RobustSetSize { gamma, size: robust_indices(&stored, gamma)?.len() }))
            .collect::<Result<_>>()?;
        let sidecar = ReferenceSidecar {
            object_id: object.id.clone(),
            key: hex::encode(key),
            config_hash: config.hash(),
            format_version: refio::FORMAT_VERSION,
            oracle_version: reference.oracle_version.clone(),
            file: refio::binary_path(Path::new(""), &object.id).display().to_string(),
            file_sha256: String::new(),
            mesh: m.info.clone(),
            counts: reference.counts,
            grid,
            grid_orientations: Se3Grid::new(grid)?.orientations().len(),
            gripper: config.gripper,
            friction: config.friction,
            robustness: reference.robustness_info,
            robust_set_sizes,
        };
        refio::write(&dir, &reference, &key, &sidecar)?;
        let c = reference.counts;
        log::info!("{}: {} enumerated, {} valid, {} successful", object.id, c.enumerated, c.valid, c.success);
        objects.insert(object.id.clone(), ObjectStage { counts: c, reference_ms: millis(t), resumed: false });
    }
    let stage = ReferenceStage { wall_ms: millis(start), objects };
    let mut manifest = RunManifest::load_or_new(&config.out_dir, config);
    manifest.reference = Some(stage.clone());
    manifest.save(&config.out_dir)?;
    Ok(stage)
}

/// Everything a cell needs from its object, shared across samplers and seeds.
pub struct ObjectContext {
    pub object: ObjectConfig,
    pub mesh: TriMesh,
    pub reference: ReferenceSet,
    pub key: [u8; 32],
    pub successes: Vec<Pose>,
    /// Per configured gamma: positions in `successes` of the robust grasps.
    pub robust: Vec<Vec<usize>>,
}

/// Loads an object's reference and checks it was built from the current inputs.
pub fn load_context(loaded: &LoadedConfig, object: &ObjectConfig, dir: &Path) -> Result<ObjectContext> {
    let config = &loaded.config;
    let m = load_object(loaded, object)?;
    let key = reference_key(config, object, &m);
    let (reference, found) = refio::read(&refio::binary_path(dir, &object.id))?;
    if found != key {
        return Err(PipelineError::ReferenceMismatch {
            object: object.id.clone(),
            expected: hex::encode(key),
            found: hex::encode(found),
        });
    }
    let mut position = vec![usize::MAX; reference.grasps.len()];
    let mut successes = Vec::new();
    for (i, g) in reference.grasps.iter().enumerate() {
        if g.label.success {
            position[i] = successes.len();
            successes.push(g.pose);
        }
    }
    let robust = config
        .gamma
        .iter()
        .map(|&gamma| Ok(robust_indices(&reference, gamma)?.into_iter().map(|i| position[i]).collect()))
        .collect::<Result<_>>()?;
    Ok(ObjectContext { object: object.clone(), mesh: m.mesh, reference, key, successes, robust })
}

/// Deterministic description of one finished cell, written next to its CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSidecar {
    pub config_hash: String,
    pub object_id: String,
    pub sampler: String,
    pub sampler_spec: grasp_core::SamplerSpec,
    pub seed: u64,
    pub reference_key: String,
    pub csv: String,
    pub target: usize,
    pub valid: usize,
    pub attempts: u64,
    pub exhausted: bool,
    pub checkpoints_reached: Vec<usize>,
    /// Why values in some rows are empty.
    pub undefined: Vec<String>,
}

/// Valid poses of one sampler stream, with the attempts and time at which
/// each checkpoint was reached.
pub struct DrawnSamples {
    pub poses: Vec<Pose>,
    pub attempts_at: Vec<u64>,
    pub ms_at: Vec<u64>,
    pub attempts: u64,
    pub exhausted: bool,
}

pub fn draw_samples(config: &RunConfig, mesh: &TriMesh, sampler: &SamplerConfig, seed: u64) -> Result<DrawnSamples> {
    let start = Instant::now();
    let target = *config.checkpoints.last().expect("validated");
    let s = Sampler::new(mesh, &config.gripper, sampler.spec(seed), config.line_spacing())?;
    let mut stream = s.stream(target).with_budget(config.attempt_cap());
    let mut poses = Vec::with_capacity(target);
    let (mut attempts_at, mut ms_at) = (Vec::new(), Vec::new());
    let mut next = 0;
    for c in stream.by_ref() {
        if !c.validity.is_valid() {
            continue;
        }
        poses.push(c.pose);
        if config.checkpoints.get(next) == Some(&poses.len()) {
            attempts_at.push(c.sampler_attempt_index as u64 + 1);
            ms_at.push(millis(start));
            next += 1;
        }
    }
    Ok(DrawnSamples { poses, attempts_at, ms_at, attempts: stream.attempts() as u64, exhausted: stream.exhausted() })
}

/// Samples one (object, sampler, seed) cell and computes its checkpoint rows.
pub fn run_cell(
    config: &RunConfig,
    ctx: &ObjectContext,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<(Vec<ReportRow>, CellSidecar)> {
    let drawn = draw_samples(config, &ctx.mesh, sampler, seed)?;
    let labels: Vec<_> = drawn
        .poses
        .par_iter()
        .map(|p| evaluate_grasp(&ctx.mesh, p, &config.gripper, config.friction))
        .collect();
    let label = sampler.label();
    let mut rows = Vec::new();
    let mut undefined = Vec::new();
    let reached = &config.checkpoints[..drawn.attempts_at.len()];
    for (k, &n) in reached.iter().enumerate() {
        let attempts = drawn.attempts_at[k];
        let precision = match precision_with(&labels[..n], config.precision_denominator.for_attempts(attempts)) {
            Ok(p) => Some(p),
            Err(e) => {
                undefined.push(format!("n={n}: precision: {e}"));
                None
            }
        };
        let plain = PoseIndex::build(&drawn.poses[..n], config.metric)
            .and_then(|index| NearestDistances::compute(&index, &ctx.successes));
        let mut emit = |gamma: Option<f64>, d: std::result::Result<&NearestDistances<f64>, String>| {
            let tag = gamma.map_or("plain".to_string(), |g| format!("gamma={g}"));
            let mut note = |e: String| {
                let msg = format!("n={n} {tag}: {e}");
                if !undefined.contains(&msg) {
                    undefined.push(msg);
                }
            };
            let (cov2, cov3) = match d {
                Ok(d) => (d.cov2().map_err(|e| e.to_string()), d.cov3().map_err(|e| e.to_string())),
                Err(ref e) => (Err(e.clone()), Err(e.clone())),
            };
            let cov2 = cov2.map_err(&mut note).ok();
            let cov3 = cov3.map_err(&mut note).ok();
            for &eps in &config.eps {
                let cov1 = match d {
                    Ok(d) => d.cov1(eps).map_err(|e| e.to_string()),
                    Err(ref e) => Err(e.clone()),
                };
                rows.push(ReportRow {
                    object_id: ctx.object.id.clone(),
                    sampler: label.clone(),
                    n_valid: n,
                    attempts,
                    eps,
                    gamma,
                    cov1: cov1.map_err(&mut note).ok(),
                    cov2,
                    cov3,
                    precision,
                    wall_ms: drawn.ms_at[k],
                });
            }
        };
        emit(None, plain.as_ref().map_err(|e| e.to_string()));
        for (&gamma, robust) in config.gamma.iter().zip(&ctx.robust) {
            match &plain {
                _ if robust.is_empty() => emit(Some(gamma), Err("robust reference set is empty".into())),
                Ok(d) => emit(Some(gamma), Ok(&d.subset(robust))),
                Err(e) => emit(Some(gamma), Err(e.to_string())),
            }
        }
    }
    if drawn.exhausted {
        log::warn!(
            "{} / {label} / seed {seed}: attempt cap reached with {} valid samples",
            ctx.object.id,
            drawn.poses.len()
        );
    }
    let (csv, _) = cell_paths(config, &ctx.object.id, sampler, seed);
    let sidecar = CellSidecar {
        config_hash: config.hash(),
        object_id: ctx.object.id.clone(),
        sampler: label,
        sampler_spec: sampler.spec(seed),
        seed,
        reference_key: hex::encode(ctx.key),
        csv: csv.file_name().unwrap().to_string_lossy().into_owned(),
        target: *config.checkpoints.last().expect("validated"),
        valid: drawn.poses.len(),
        attempts: drawn.attempts,
        exhausted: drawn.exhausted,
        checkpoints_reached: reached.to_vec(),
        undefined,
    };
    Ok((rows, sidecar))
}

fn finished_cell(csv: &Path, sidecar: &Path, config_hash: &str, reference_key: &str) -> bool {
    match read_json::<CellSidecar>(sidecar) {
        Ok(s) => s.config_hash == config_hash && s.reference_key == reference_key && csv.is_file(),
        Err(_) => false,
    }
}

/// Runs every (object, sampler, seed) cell, then writes the aggregate reports.
pub fn cmd_evaluate(loaded: &LoadedConfig, options: &RunOptions) -> Result<EvaluateStage> {
    let config = &loaded.config;
    let start = Instant::now();
    let dir = options.reference_dir.clone().unwrap_or_else(|| reference_dir(config));
    let contexts: Vec<ObjectContext> =
        config.objects.iter().map(|o| load_context(loaded, o, &dir)).collect::<Result<_>>()?;
    let hash = config.hash();
    let cells: Vec<(&ObjectContext, &SamplerConfig, u64)> = contexts
        .iter()
        .flat_map(|c| config.samplers.iter().flat_map(move |s| config.seeds.iter().map(move |&seed| (c, s, seed))))
        .collect();
    let outcomes: Vec<Result<(bool, bool)>> = in_pool(options.jobs, || {
        cells
            .par_iter()
            .map(|&(ctx, sampler, seed)| {
                let (csv, side) = cell_paths(config, &ctx.object.id, sampler, seed);
                if options.resume && finished_cell(&csv, &side, &hash, &hex::encode(ctx.key)) {
                    log::info!("{} / {} / seed {seed}: done earlier, skipped", ctx.object.id, sampler.label());
                    let s: CellSidecar = read_json(&side)?;
                    return Ok((true, s.exhausted));
                }
                let t = Instant::now();
                let (rows, sidecar) = run_cell(config, ctx, sampler, seed)?;
                report::write_rows(&csv, &rows, &COLUMNS)?;
                write_json_atomic(&side, &sidecar)?;
                log::info!("{} / {} / seed {seed}: {} ms", ctx.object.id, sampler.label(), millis(t));
                Ok((false, sidecar.exhausted))
            })
            .collect()
    })?;
    let mut cells_resumed = 0;
    let mut cells_exhausted = 0;
    for o in outcomes {
        let (resumed, exhausted) = o?;
        cells_resumed += usize::from(resumed);
        cells_exhausted += usize::from(exhausted);
    }

    // reports are rebuilt from the files, so resumed cells count the same as fresh ones
    let mut rows: Vec<ReportRow> = Vec::new();
    for &(ctx, sampler, seed) in &cells {
        rows.extend(report::read_rows::<ReportRow>(&cell_paths(config, &ctx.object.id, sampler, seed).0, &COLUMNS)?);
    }
    let out = &config.out_dir;
    report::write_rows(&out.join(AGGREGATE_FILE), &report::aggregate(&rows), &AGGREGATE_COLUMNS)?;
    let final_n = *config.checkpoints.last().expect("validated");
    let table = report::precision_table(&rows, final_n);
    report::write_rows(
        &out.join(PRECISION_FILE),
        &table,
        &["sampler", "object_id", "n_valid", "cells", "precision_mean", "precision_std"],
    )?;
    crate::util::write_atomic(&out.join(PRECISION_MARKDOWN), report::precision_markdown(&table).as_bytes())?;

    let undefined_rows = rows
        .iter()
        .filter(|r| r.cov1.is_none() || r.cov2.is_none() || r.cov3.is_none() || r.precision.is_none())
        .count();
    let object_counts: BTreeMap<String, ReferenceCounts> =
        contexts.iter().map(|c| (c.object.id.clone(), c.reference.counts)).collect();
    let mut outputs: Vec<PathBuf> = cells
        .iter()
        .map(|&(ctx, s, seed)| cell_paths(config, &ctx.object.id, s, seed).0.strip_prefix(out).unwrap().to_path_buf())
        .collect();
    outputs.extend([AGGREGATE_FILE, PRECISION_FILE, PRECISION_MARKDOWN].map(PathBuf::from));
    let stage = EvaluateStage {
        wall_ms: millis(start),
        cells: cells.len(),
        cells_resumed,
        cells_exhausted,
        undefined_rows,
        object_counts,
        outputs,
    };
    let mut manifest = RunManifest::load_or_new(out, config);
    manifest.evaluate = Some(stage.clone());
    manifest.save(out)?;
    Ok(stage)
}
