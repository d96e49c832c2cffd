//! Report CSVs: per-cell checkpoint rows, cross-cell aggregates and the precision table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::util::write_atomic;

/// Column order of every per-cell CSV.
pub const COLUMNS: [&str; 11] =
    ["object_id", "sampler", "n_valid", "attempts", "eps", "gamma", "cov1", "cov2", "cov3", "precision", "wall_ms"];

pub const AGGREGATE_COLUMNS: [&str; 13] = [
    "sampler",
    "n_valid",
    "eps",
    "gamma",
    "cells",
    "cov1_mean",
    "cov1_std",
    "cov2_mean",
    "cov2_std",
    "cov3_mean",
    "cov3_std",
    "precision_mean",
    "precision_std",
];

/// One checkpoint of one cell at one `(eps, gamma)`. Empty fields are undefined
/// values (for example an empty robust reference). `gamma` is empty for rows
/// against the plain success set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub object_id: String,
    pub sampler: String,
    pub n_valid: usize,
    /// Sampler attempts consumed to reach `n_valid` valid samples.
    pub attempts: u64,
    pub eps: f64,
    pub gamma: Option<f64>,
    pub cov1: Option<f64>,
    pub cov2: Option<f64>,
    pub cov3: Option<f64>,
    pub precision: Option<f64>,
    /// Milliseconds from cell start until `n_valid` valid samples were drawn.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sampler: String,
    pub n_valid: usize,
    pub eps: f64,
    pub gamma: Option<f64>,
    /// Rows in the group; means and stds skip undefined values.
    pub cells: usize,
    pub cov1_mean: Option<f64>,
    pub cov1_std: Option<f64>,
    pub cov2_mean: Option<f64>,
    pub cov2_std: Option<f64>,
    pub cov3_mean: Option<f64>,
    pub cov3_std: Option<f64>,
    pub precision_mean: Option<f64>,
    pub precision_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub sampler: String,
    /// `all` for the row pooling every object.
    pub object_id: String,
    pub n_valid: usize,
    pub cells: usize,
    pub precision_mean: Option<f64>,
    pub precision_std: Option<f64>,
}

pub fn to_csv<S: Serialize>(rows: &[S], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| PipelineError::Validation(e.to_string()))
}

pub fn write_rows<S: Serialize>(path: &Path, rows: &[S], header: &[&str]) -> Result<()> {
    write_atomic(path, &to_csv(rows, header)?)
}

/// Reads a CSV, rejecting files whose header differs from `header`.
pub fn read_rows<D: serde::de::DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<D>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(PipelineError::Format {
            path: path.to_path_buf(),
            message: format!("columns {found:?} do not match {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(PipelineError::from)).collect()
}

/// Mean and population standard deviation, skipping undefined values.
pub fn mean_std(values: impl IntoIterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Groups rows by `(sampler, n_valid, eps, gamma)` across objects and seeds.
///
/// Output is ordered by sampler (first appearance), then `n_valid`; within a
/// checkpoint groups keep the order of their first row.
pub fn aggregate(rows: &[ReportRow]) -> Vec<AggregateRow> {
    type Key<'a> = (&'a str, usize, u64, Option<u64>);
    let mut position: HashMap<Key, usize> = HashMap::new();
    let mut groups: Vec<(Key, Vec<&ReportRow>)> = Vec::new();
    for r in rows {
        let key = (r.sampler.as_str(), r.n_valid, r.eps.to_bits(), r.gamma.map(f64::to_bits));
        let i = *position.entry(key).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(r);
    }
    let mut sampler_rank: HashMap<&str, usize> = HashMap::new();
    for (key, _) in &groups {
        let next = sampler_rank.len();
        sampler_rank.entry(key.0).or_insert(next);
    }
    groups.sort_by_key(|(key, _)| (sampler_rank[key.0], key.1));
    groups
        .into_iter()
        .map(|(key, g)| {
            let (cov1_mean, cov1_std) = mean_std(g.iter().map(|r| r.cov1));
            let (cov2_mean, cov2_std) = mean_std(g.iter().map(|r| r.cov2));
            let (cov3_mean, cov3_std) = mean_std(g.iter().map(|r| r.cov3));
            let (precision_mean, precision_std) = mean_std(g.iter().map(|r| r.precision));
            AggregateRow {
                sampler: key.0.to_string(),
                n_valid: key.1,
                eps: f64::from_bits(key.2),
                gamma: key.3.map(f64::from_bits),
                cells: g.len(),
                cov1_mean,
                cov1_std,
                cov2_mean,
                cov2_std,
                cov3_mean,
                cov3_std,
                precision_mean,
                precision_std,
            }
        })
        .collect()
}

/// Precision at checkpoint `n_valid` per sampler and object, plus an `all` row per sampler.
///
/// Uses the plain rows at the first eps (precision does not depend on eps or gamma).
pub fn precision_table(rows: &[ReportRow], n_valid: usize) -> Vec<PrecisionRow> {
    let Some(first_eps) = rows.first().map(|r| r.eps) else {
        return Vec::new();
    };
    let picked: Vec<&ReportRow> =
        rows.iter().filter(|r| r.n_valid == n_valid && r.gamma.is_none() && r.eps == first_eps).collect();
    let mut samplers: Vec<&str> = Vec::new();
    let mut objects: Vec<&str> = Vec::new();
    for r in rows {
        if !samplers.contains(&r.sampler.as_str()) {
            samplers.push(&r.sampler);
        }
        if !objects.contains(&r.object_id.as_str()) {
            objects.push(&r.object_id);
        }
    }
    let mut out = Vec::new();
    for s in &samplers {
        let of_sampler: Vec<&&ReportRow> = picked.iter().filter(|r| r.sampler == *s).collect();
        for o in objects.iter().copied().chain(["all"]) {
            let cells: Vec<Option<f64>> =
                of_sampler.iter().filter(|r| o == "all" || r.object_id == o).map(|r| r.precision).collect();
            let (precision_mean, precision_std) = mean_std(cells.iter().copied());
            out.push(PrecisionRow {
                sampler: s.to_string(),
                object_id: o.to_string(),
                n_valid,
                cells: cells.len(),
                precision_mean,
                precision_std,
            });
        }
    }
    out
}

/// Markdown rendering of [`precision_table`]: one row per sampler, `mean (std)` per object.
pub fn precision_markdown(table: &[PrecisionRow]) -> String {
    let mut objects: Vec<&str> = Vec::new();
    for r in table {
        if !objects.contains(&r.object_id.as_str()) {
            objects.push(&r.object_id);
        }
    }
    let mut s = String::new();
    let n = table.first().map_or(0, |r| r.n_valid);
    let _ = writeln!(s, "Precision at n_valid = {n}, mean (std) over seeds; `all` pools every object and seed.\n");
    let _ = writeln!(s, "| sampler | {} |", objects.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(objects.len()));
    let mut samplers: Vec<&str> = Vec::new();
    for r in table {
        if !samplers.contains(&r.sampler.as_str()) {
            samplers.push(&r.sampler);
        }
    }
    for sampler in samplers {
        let cells: Vec<String> = objects
            .iter()
            .map(|o| {
                let r = table.iter().find(|r| r.sampler == sampler && r.object_id == *o);
                match r.and_then(|r| r.precision_mean.zip(r.precision_std)) {
                    Some((m, sd)) => format!("{m:.3} ({sd:.3})"),
                    None => "n/a".into(),
                }
            })
            .collect();
        let _ = writeln!(s, "| {sampler} | {} |", cells.join(" | "));
    }
    s
}
