use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{emit_table, ExperimentConfig, ExperimentRun};
use crate::error::{Error, Result};

/// Machine-readable summary of one run. Contains no timestamps, so equal
/// configurations give byte-identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: BTreeMap<&'static str, String>,
    pub parallel_build: bool,
    pub attempts: usize,
    pub failures: usize,
    pub failures_by_method: BTreeMap<String, usize>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    /// Mean λ̂ divided by the training-set size, per row and column.
    pub lambda_per_sample: BTreeMap<String, BTreeMap<String, Option<f64>>>,
}

impl RunManifest {
    pub fn new(run: &ExperimentRun, cfg: &ExperimentConfig, outputs: Vec<String>) -> Self {
        let mut failures_by_method = BTreeMap::new();
        for rec in &run.records {
            for (method, outcome) in &rec.outcomes {
                let entry = failures_by_method.entry(method.label().to_string()).or_insert(0);
                if outcome.is_err() {
                    *entry += 1;
                }
            }
        }
        let table = &run.table;
        let lambda_per_sample = table
            .row_labels
            .iter()
            .zip(&table.cells)
            .map(|(row, cells)| {
                let inner = table
                    .column_labels
                    .iter()
                    .zip(cells)
                    .map(|(col, cell)| {
                        let v = cell.mean_per_sample;
                        (col.clone(), v.is_finite().then_some(v))
                    })
                    .collect();
                (row.clone(), inner)
            })
            .collect();
        let mut notes = table.metadata.notes.clone();
        for (domain, report) in &run.preprocessing {
            if !report.zero_variance.is_empty() {
                notes.push(format!("{domain}: zero-variance features {}", report.zero_variance.join(" ")));
            }
        }
        Self {
            experiment: run.name.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            config_hash: cfg.config_hash(),
            config: cfg.canonical(),
            parallel_build: crate::par::is_parallel(),
            attempts: run.attempts,
            failures: run.failures,
            failures_by_method,
            outputs,
            notes,
            lambda_per_sample,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Write the run's tables in every configured format plus
/// `<name>.manifest.json` into `cfg.out_dir`. Returns the written paths.
pub fn write_outputs(run: &ExperimentRun, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir: &Path = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for &format in &cfg.formats {
        let path = dir.join(format!("{}.{}", run.name, format.extension()));
        emit_table(&run.table, format, &path)?;
        paths.push(path);
    }
    let names = paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = RunManifest::new(run, cfg, names);
    let path = dir.join(format!("{}.manifest.json", run.name));
    fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    paths.push(path);
    Ok(paths)
}
