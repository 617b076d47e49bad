use std::path::Path;

use super::{
    aggregate, count_failures, grid_label, ExperimentConfig, ExperimentRun, Method, RepeatContext,
    RepeatRecord, TableMetadata,
};
use crate::data::{load_uci_heart, preprocess_domains, LabeledDataset};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::rng::rng_for;

const STREAM: u64 = 1;

/// `(code, name, file)` for each hospital.
pub const HOSPITALS: [(&str, &str, &str); 4] = [
    ("C", "Cleveland", "processed.cleveland.data"),
    ("V", "Virginia", "processed.va.data"),
    ("H", "Hungary", "processed.hungarian.data"),
    ("S", "Switzerland", "processed.switzerland.data"),
];

/// Ordered (source, target) hospital pairs, in table order.
pub const PAIRS: [(&str, &str); 12] = [
    ("C", "V"),
    ("C", "H"),
    ("C", "S"),
    ("V", "H"),
    ("V", "S"),
    ("H", "S"),
    ("V", "C"),
    ("H", "C"),
    ("S", "C"),
    ("H", "V"),
    ("S", "V"),
    ("S", "H"),
];

fn load_hospitals(data_dir: &Path) -> Result<Vec<LabeledDataset>> {
    HOSPITALS
        .iter()
        .map(|(code, name, file)| {
            let path = data_dir.join(file);
            if !path.exists() {
                return Err(Error::io(
                    &path,
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("{name} ({code}) data file not found"),
                    ),
                ));
            }
            load_uci_heart(&path, code)
        })
        .collect()
}

/// Every ordered hospital pair, repeated `cfg.repeats` times with a fresh
/// split plan (and fresh estimator-internal splits) per repetition.
pub fn run_heart(cfg: &ExperimentConfig, data_dir: &Path) -> Result<ExperimentRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let raw = load_hospitals(data_dir)?;
    let processed = preprocess_domains(&raw, cfg.missing_threshold)?;
    let preprocessing: Vec<_> = processed
        .iter()
        .map(|(d, report)| (d.name().to_string(), report.clone()))
        .collect();
    let domains: Vec<LabeledDataset> = processed.into_iter().map(|(d, _)| d).collect();
    let index = |code: &str| HOSPITALS.iter().position(|h| h.0 == code).expect("known hospital");

    let ctx = RepeatContext {
        grid: &grid,
        fold_count: cfg.fold_count,
        estimators: &cfg.estimators,
        settings: &cfg.estimator_settings,
        risk_mode: cfg.risk_mode,
    };
    let settings: Vec<String> = PAIRS.iter().map(|(s, t)| format!("{s} {t}")).collect();

    let jobs = PAIRS.len() * cfg.repeats;
    let records = map_indexed(jobs, cfg.jobs, |job| {
        let p = job / cfg.repeats;
        let r = job % cfg.repeats;
        let (s, t) = PAIRS[p];
        let source = &domains[index(s)];
        let target = &domains[index(t)];
        let path = [STREAM, p as u64, r as u64];
        let mut rng = rng_for(cfg.seed, &path);
        let (fit_source, fit_target) = if cfg.intercept {
            (source.with_bias_column(), target.with_bias_column())
        } else {
            (source.clone(), target.clone())
        };
        let outcomes = ctx.run(
            &fit_source,
            &fit_target,
            source.features(),
            target.features(),
            Vec::new(),
            &mut rng,
            (cfg.seed, &path),
        );
        RepeatRecord {
            setting: settings[p].clone(),
            repeat: r,
            outcomes,
        }
    });

    let mut methods = vec![Method::SourceCv];
    methods.extend(cfg.estimators.iter().map(|&e| Method::Weighted(e)));
    methods.push(Method::Target);

    let removed: Vec<String> = preprocessing
        .first()
        .map(|(_, r)| r.removed_features.iter().map(|f| f.name.clone()).collect())
        .unwrap_or_default();
    let metadata = TableMetadata {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        grid: grid_label(cfg),
        spread: if cfg.report_std { "std" } else { "stderr" }.into(),
        notes: vec![
            format!(
                "{} repetitions re-randomize the {}-fold split plan and estimator-internal splits",
                cfg.repeats, cfg.fold_count
            ),
            format!(
                "features removed (missing > {}): {}",
                cfg.missing_threshold,
                if removed.is_empty() { "none".into() } else { removed.join(" ") }
            ),
            "each hospital z-scored with its own statistics".into(),
        ],
    };
    let table = aggregate("heart", "X Z", &settings, &methods, &records, false, metadata);
    let (attempts, failures) = count_failures(&records);
    Ok(ExperimentRun {
        name: "heart".into(),
        table,
        records,
        attempts,
        failures,
        preprocessing,
    })
}
