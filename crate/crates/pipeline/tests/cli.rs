//! End-to-end runs of the `graspbench` binary on a coarse grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use grasp_core::se3::pose_distance;
use grasp_core::{MetricParams, Pose};
use grasp_pipeline::farthest::FarthestOutput;
use grasp_pipeline::manifest::RunManifest;
use grasp_pipeline::refio;
use grasp_pipeline::report::{ReportRow, COLUMNS};
use grasp_pipeline::run::CellSidecar;
use grasp_pipeline::util::sha256_file;
use tempfile::TempDir;

fn mesh(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/meshes").join(name)
}

fn base_config() -> String {
    format!(
        r#"
seeds = [1, 2]
checkpoints = [5, 50, 200]
gamma = [0.0, 0.5, 1.0]

[[objects]]
id = "cube"
path = "{}"

[[objects]]
id = "bracket"
path = "{}"

[grid]
translation_step = 20.0
rotation_step = 90.0

[robustness]
eps = 2.0
domain = "valid_only"

[[samplers]]
kind = "uniform"

[[samplers]]
kind = "antipodal"
alpha = "pi/6"
"#,
        mesh("cube.obj").display(),
        mesh("l_bracket.obj").display()
    )
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn graspbench(args: &[&str]) -> Output {
    let o = Command::new(env!("CARGO_BIN_EXE_graspbench")).args(args).env("RUST_LOG", "warn").output().unwrap();
    Output {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8_lossy(&o.stdout).into(),
        stderr: String::from_utf8_lossy(&o.stderr).into(),
    }
}

fn ok(args: &[&str]) -> Output {
    let o = graspbench(args);
    assert_eq!(o.code, 0, "{args:?}\n{}", o.stderr);
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn cell_rows(out: &Path) -> BTreeMap<PathBuf, Vec<ReportRow>> {
    let mut rows = BTreeMap::new();
    for object in fs::read_dir(out.join("cells")).unwrap() {
        for f in fs::read_dir(object.unwrap().path()).unwrap() {
            let p = f.unwrap().path();
            if p.extension().unwrap() == "csv" {
                rows.insert(p.clone(), grasp_pipeline::report::read_rows(&p, &COLUMNS).unwrap());
            }
        }
    }
    rows
}

/// Every output file except the manifest, with the timing column dropped from cell CSVs.
fn fingerprint(out: &Path) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(out).unwrap().display().to_string();
            if rel == "manifest.json" {
                continue;
            }
            let text = if rel.starts_with("cells") && rel.ends_with(".csv") {
                let t = fs::read_to_string(&p).unwrap();
                t.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>().join("\n")
            } else {
                sha256_file(&p).unwrap()
            };
            files.insert(rel, text);
        }
    }
    files
}

#[test]
fn both_config_syntaxes_validate_to_one_hash() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let a = ok(&["validate-config", "--config", s(&dir.join("smoke.toml"))]);
    let b = ok(&["validate-config", "--config", s(&dir.join("smoke.json"))]);
    assert!(a.stdout.starts_with("config ok, hash "));
    assert_eq!(a.stdout, b.stdout);
    ok(&["validate-config", "--config", s(&dir.join("desk.toml"))]);
}

#[test]
fn validation_errors_exit_with_one() {
    let f = Fixture::new();
    let missing = f.config("missing.toml", &base_config().replace("cube.obj", "no_such_mesh.obj"));
    let o = graspbench(&["validate-config", "--config", s(&missing)]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("no_such_mesh.obj"), "{}", o.stderr);
    let o = graspbench(&["reference", "--config", s(&missing), "--out", s(&f.out("o"))]);
    assert_eq!(o.code, 1);
    assert!(!f.out("o").exists());

    let unknown = f.config("unknown.toml", &format!("bogus = 3\n{}", base_config()));
    assert_eq!(graspbench(&["validate-config", "--config", s(&unknown)]).code, 1);
    let good = f.config("good.toml", &base_config());
    assert_eq!(graspbench(&["validate-config", "--config", s(&good), "--eps=-1"]).code, 1);
    assert_eq!(graspbench(&["validate-config", "--config", s(&good), "--gamma", "1.5"]).code, 1);
    assert_eq!(graspbench(&["validate-config", "--config", s(&good), "--eps", "abc"]).code, 1);
    assert_eq!(graspbench(&["evaluate", "--config", s(&good), "--jobs", "0"]).code, 1);
    assert_eq!(graspbench(&["frobnicate"]).code, 1);
    let txt = f.config("c.txt", &base_config());
    assert_eq!(graspbench(&["validate-config", "--config", s(&txt)]).code, 1);
    assert_eq!(graspbench(&["--help"]).code, 0);
}

#[test]
fn budget_exceeded_exits_with_three_before_any_output() {
    let f = Fixture::new();
    let c = f.config("c.toml", &format!("{}\n[caps]\nreference_poses = 1000\n", base_config()));
    let o = graspbench(&["reference", "--config", s(&c), "--out", s(&f.out("o"))]);
    assert_eq!(o.code, 3, "{}", o.stderr);
    assert!(o.stderr.contains("budget"), "{}", o.stderr);
    assert!(!f.out("o").join("reference").exists());
}

#[test]
fn reference_and_evaluate_end_to_end() {
    let f = Fixture::new();
    let c = f.config("c.toml", &base_config());
    let out = f.out("run");
    let (cs, os) = (s(&c), s(&out));
    ok(&["reference", "--config", cs, "--out", os]);
    let first: Vec<Vec<u8>> = ["cube", "bracket"]
        .iter()
        .map(|o| fs::read(refio::binary_path(&out.join("reference"), o)).unwrap())
        .collect();
    ok(&["reference", "--config", cs, "--out", os]);
    for (o, bytes) in ["cube", "bracket"].iter().zip(&first) {
        assert_eq!(&fs::read(refio::binary_path(&out.join("reference"), o)).unwrap(), bytes, "{o} not byte-identical");
    }

    ok(&["evaluate", "--config", cs, "--out", os]);
    let hash = ok(&["validate-config", "--config", cs]).stdout.trim().rsplit(' ').next().unwrap().to_string();
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config_hash, hash);
    assert!(manifest.reference.is_some());
    let stage = manifest.evaluate.unwrap();
    assert_eq!((stage.cells, stage.cells_resumed), (8, 0));
    assert_eq!(stage.object_counts["cube"], manifest.reference.unwrap().objects["cube"].counts);

    let cells = cell_rows(&out);
    assert_eq!(cells.len(), 8);
    let mut all: Vec<ReportRow> = Vec::new();
    for (path, rows) in &cells {
        // rows trace back to (config hash, seed, object, sampler) through the sidecar
        let side: CellSidecar =
            serde_json::from_str(&fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
        assert_eq!(side.config_hash, hash);
        assert!(path.file_name().unwrap().to_str().unwrap().ends_with(&format!(".seed{}.csv", side.seed)));
        assert_eq!(side.sampler_spec.seed, side.seed);
        assert_eq!(rows.len(), 3 * 4 * 3);
        for r in rows {
            assert_eq!((&r.object_id, &r.sampler), (&side.object_id, &side.sampler));
            for v in [r.cov1, r.cov2, r.cov3, r.precision].into_iter().flatten() {
                assert!((0.0..=1.0).contains(&v));
            }
            if let (Some(c2), Some(c3)) = (r.cov2, r.cov3) {
                assert!(c3 >= c2);
            }
        }
        // along checkpoints every coverage is non-decreasing
        let mut by_series: BTreeMap<(u64, Option<u64>), Vec<&ReportRow>> = BTreeMap::new();
        for r in rows {
            by_series.entry((r.eps.to_bits(), r.gamma.map(f64::to_bits))).or_default().push(r);
        }
        for series in by_series.values() {
            assert!(series.windows(2).all(|w| w[0].n_valid < w[1].n_valid && w[0].attempts <= w[1].attempts));
            for get in [|r: &ReportRow| r.cov1, |r: &ReportRow| r.cov2, |r: &ReportRow| r.cov3] {
                let v: Vec<f64> = series.iter().filter_map(|r| get(r)).collect();
                assert!(v.windows(2).all(|w| w[0] <= w[1]), "{path:?}");
            }
        }
        // gamma = 0 reproduces the plain rows exactly
        for r in rows.iter().filter(|r| r.gamma == Some(0.0)) {
            let plain = rows.iter().find(|p| p.gamma.is_none() && p.n_valid == r.n_valid && p.eps == r.eps).unwrap();
            assert_eq!((r.cov1, r.cov2, r.cov3), (plain.cov1, plain.cov2, plain.cov3));
        }
        // the bracket's gamma = 1 robust set is empty: undefined values, other rows intact
        let empty = rows.iter().filter(|r| r.gamma == Some(1.0)).all(|r| r.cov1.is_none() && r.precision.is_some());
        assert_eq!(empty, side.object_id == "bracket");
        assert_eq!(side.undefined.is_empty(), side.object_id == "cube");
        all.extend(rows.iter().cloned());
    }

    // aggregate rows recomputed by a plain double loop
    let agg = csv::Reader::from_path(out.join("aggregate.csv")).unwrap().into_records().map(|r| r.unwrap()).collect::<Vec<_>>();
    assert_eq!(agg.len(), 2 * 3 * 4 * 3);
    let num = |s: &str| if s.is_empty() { None } else { Some(s.parse::<f64>().unwrap()) };
    for rec in &agg {
        let (sampler, n, eps, gamma) = (&rec[0], rec[1].parse::<usize>().unwrap(), num(&rec[2]).unwrap(), num(&rec[3]));
        let group: Vec<&ReportRow> =
            all.iter().filter(|r| r.sampler == sampler && r.n_valid == n && r.eps == eps && r.gamma == gamma).collect();
        assert_eq!(rec[4].parse::<usize>().unwrap(), group.len());
        for (k, get) in [|r: &ReportRow| r.cov1, |r: &ReportRow| r.cov2, |r: &ReportRow| r.cov3, |r: &ReportRow| r.precision]
            .iter()
            .enumerate()
        {
            let v: Vec<f64> = group.iter().filter_map(|r| get(r)).collect();
            let (mean, std) = (num(&rec[5 + 2 * k]), num(&rec[6 + 2 * k]));
            if v.is_empty() {
                assert_eq!((mean, std), (None, None));
                continue;
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
            assert!((mean.unwrap() - m).abs() <= 1e-12 && (std.unwrap() - sd).abs() <= 1e-12);
        }
    }
    let table = fs::read_to_string(out.join("precision_table.csv")).unwrap();
    assert!(table.starts_with("sampler,object_id,n_valid,cells,precision_mean,precision_std\n"));
    assert_eq!(table.lines().count(), 1 + 2 * 3);

    // resume recomputes only what is missing and reproduces the same files
    let before = fingerprint(&out);
    let victim = cells.keys().next().unwrap();
    fs::remove_file(victim).unwrap();
    fs::remove_file(victim.with_extension("json")).unwrap();
    ok(&["reference", "--config", cs, "--out", os, "--resume"]);
    ok(&["evaluate", "--config", cs, "--out", os, "--resume", "--jobs", "2"]);
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.reference.unwrap().objects.values().all(|o| o.resumed));
    assert_eq!(manifest.evaluate.unwrap().cells_resumed, 7);
    assert_eq!(fingerprint(&out), before);

    // a fresh run with a different worker count writes the same files
    let other = f.out("run2");
    ok(&["reference", "--config", cs, "--out", s(&other), "--jobs", "1"]);
    ok(&["evaluate", "--config", cs, "--out", s(&other), "--jobs", "1"]);
    assert_eq!(fingerprint(&other), before);

    // references built from other inputs are refused
    let changed = f.config("changed.toml", &base_config().replace("seeds = [1, 2]", "friction = 0.5\nseeds = [1, 2]"));
    let o = graspbench(&["evaluate", "--config", s(&changed), "--out", os]);
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert!(o.stderr.contains("reference for cube"), "{}", o.stderr);
}

#[test]
fn flag_overrides_reshape_the_run() {
    let f = Fixture::new();
    let c = f.config("c.toml", &base_config());
    let out = f.out("o");
    ok(&["reference", "--config", s(&c), "--out", s(&out), "--seed-override", "9", "--gamma", "0.5"]);
    ok(&["evaluate", "--config", s(&c), "--out", s(&out), "--seed-override", "9", "--eps", "0.3", "--gamma", "0.5"]);
    let cells = cell_rows(&out);
    assert_eq!(cells.len(), 4);
    assert!(cells.keys().all(|p| p.to_str().unwrap().ends_with(".seed9.csv")));
    for rows in cells.values() {
        assert!(rows.iter().all(|r| r.eps == 0.3 && (r.gamma.is_none() || r.gamma == Some(0.5))));
        assert_eq!(rows.len(), 3 * 2);
    }
    // eps and gamma do not enter the reference key; the default-run reference is reusable
    let o = graspbench(&["evaluate", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
}

fn farthest(reference: &Path, k: usize, gamma: f64) -> Output {
    graspbench(&["farthest", "--reference", s(reference), "-k", &k.to_string(), "--gamma", &gamma.to_string()])
}

#[test]
fn farthest_selection_properties() {
    let f = Fixture::new();
    let c = f.config("c.toml", &base_config());
    let out = f.out("o");
    ok(&["reference", "--config", s(&c), "--out", s(&out)]);
    let file = refio::binary_path(&out.join("reference"), "cube");
    let (reference, _) = refio::read(&file).unwrap();
    let scores = reference.robustness.clone().unwrap();
    let robust: Vec<usize> = (0..reference.grasps.len())
        .filter(|&i| reference.grasps[i].label.success && scores[i] >= 0.5)
        .collect();
    let parse = |o: Output| -> FarthestOutput { serde_json::from_str(&o.stdout).unwrap() };

    let one = parse(ok(&["farthest", "--reference", s(&file), "-k", "1", "--gamma", "0.5"]));
    assert_eq!(one.grasps.len(), 1);
    assert_eq!(one.grasps[0].grid_index, reference.grasps[robust[0]].grid_index);
    assert_eq!(one.robust_set_size, robust.len());

    let all = parse(farthest(&file, robust.len(), 0.5));
    let mut got: Vec<u64> = all.grasps.iter().map(|g| g.grid_index).collect();
    got.sort_unstable();
    let want: Vec<u64> = robust.iter().map(|&i| reference.grasps[i].grid_index).collect();
    assert_eq!(got, want);
    assert!(all.grasps.iter().all(|g| g.robustness >= 0.5));
    let d: Vec<f64> = all.grasps.iter().filter_map(|g| g.selection_distance).collect();
    assert!(d.windows(2).all(|w| w[0] >= w[1]));

    let params = MetricParams::default();
    let mut last = f64::INFINITY;
    for k in 2..12 {
        let sel = parse(farthest(&file, k, 0.5));
        let poses: Vec<Pose> = sel.grasps.iter().map(|g| Pose::from_f64_array(g.pose)).collect();
        let mut min = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                min = min.min(pose_distance(&poses[i], &poses[j], &params));
            }
        }
        assert!(min <= last + 1e-12, "k={k}: {min} > {last}");
        last = min;
    }

    let written = f.out("sel.json");
    ok(&["farthest", "--reference", s(&file), "-k", "3", "--out", s(&written)]);
    assert_eq!(serde_json::from_str::<FarthestOutput>(&fs::read_to_string(&written).unwrap()).unwrap().k, 3);

    assert_eq!(farthest(&file, 0, 0.5).code, 1);
    assert_eq!(farthest(&file, robust.len() + 1, 0.5).code, 1);
    let bracket = refio::binary_path(&out.join("reference"), "bracket");
    let o = farthest(&bracket, 1, 1.0);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("robust set"), "{}", o.stderr);
    assert_eq!(farthest(&f.out("nothing.grf"), 1, 0.0).code, 2);
}
