//! Benchmark runners: the artificial variance-shift study, the
//! heart-disease hospital transfer study, and expected MSE curves.

mod artificial;
pub mod config;
mod curves;
mod heart;
mod manifest;
pub mod table;

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::LabeledDataset;
use crate::error::Result;
use crate::ridge::RiskMode;
use crate::rng::Rng;
use crate::select::{CrossValidator, LambdaGrid, SelectionResult};
use crate::weights::{estimate, Estimator, EstimatorSettings, WeightVector};

pub use artificial::run_artificial;
pub use config::{ExperimentConfig, TableFormat, TargetMode};
pub use curves::{emit_mse_curves, expected_target_mse_curves, MseCurves};
pub use heart::{run_heart, HOSPITALS, PAIRS};
pub use manifest::{write_outputs, RunManifest};
pub use table::{emit_table, Cell, ResultTable, TableMetadata};

/// A way of choosing λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    /// Unweighted source cross-validation.
    SourceCv,
    /// Importance-weighted source cross-validation.
    Weighted(Estimator),
    /// Weighted cross-validation with the true density ratio.
    TrueRatio,
    /// Oracle: train on all source data, score on labeled target data.
    Target,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::SourceCv => "lambda_V",
            Method::Weighted(e) => e.label(),
            Method::TrueRatio => "pZ/pX",
            Method::Target => "lambda_Z",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Selected {
    pub lambda_hat: f64,
    pub training_size: f64,
    pub boundary: bool,
}

impl From<&SelectionResult> for Selected {
    fn from(r: &SelectionResult) -> Self {
        Self {
            lambda_hat: r.lambda_hat,
            training_size: r.training_size,
            boundary: r.boundary,
        }
    }
}

/// Outcome of every method in one repeat of one table column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatRecord {
    pub setting: String,
    pub repeat: usize,
    pub outcomes: Vec<(Method, std::result::Result<Selected, String>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRun {
    pub name: String,
    pub table: ResultTable,
    pub records: Vec<RepeatRecord>,
    pub attempts: usize,
    pub failures: usize,
    pub preprocessing: Vec<(String, crate::data::PreprocessReport)>,
}

impl ExperimentRun {
    pub fn failure_fraction(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.failures as f64 / self.attempts as f64
        }
    }

    /// Error when more than `budget` of all method runs failed.
    pub fn check_failure_budget(&self, budget: f64) -> Result<()> {
        let fraction = self.failure_fraction();
        if fraction > budget {
            return Err(crate::Error::Estimation {
                message: format!(
                    "{} of {} method runs failed, above the failure budget {budget}",
                    self.failures, self.attempts
                ),
                residual: fraction,
            });
        }
        Ok(())
    }
}

/// Column-major aggregation of repeat records into a table whose rows are
/// methods (`methods_as_rows`) or settings.
fn aggregate(
    name: &str,
    corner: &str,
    settings: &[String],
    methods: &[Method],
    records: &[RepeatRecord],
    methods_as_rows: bool,
    metadata: TableMetadata,
) -> ResultTable {
    let cell_for = |setting: &str, method: Method| {
        let mut samples = Vec::new();
        let mut failures = 0;
        for rec in records.iter().filter(|r| r.setting == setting) {
            match rec.outcomes.iter().find(|(m, _)| *m == method) {
                Some((_, Ok(sel))) => samples.push((sel.lambda_hat, sel.training_size, sel.boundary)),
                _ => failures += 1,
            }
        }
        Cell::aggregate(&samples, failures)
    };
    let method_labels: Vec<String> = methods.iter().map(|m| m.label().to_string()).collect();
    let (row_labels, column_labels, cells) = if methods_as_rows {
        let cells = methods
            .iter()
            .map(|&m| settings.iter().map(|s| cell_for(s, m)).collect())
            .collect();
        (method_labels, settings.to_vec(), cells)
    } else {
        let cells = settings
            .iter()
            .map(|s| methods.iter().map(|&m| cell_for(s, m)).collect())
            .collect();
        (settings.to_vec(), method_labels, cells)
    };
    ResultTable {
        title: name.to_string(),
        corner: corner.to_string(),
        row_labels,
        column_labels,
        cells,
        metadata,
    }
}

/// Everything a single repeat needs beyond its data.
struct RepeatContext<'a> {
    grid: &'a LambdaGrid,
    fold_count: usize,
    estimators: &'a [Estimator],
    settings: &'a EstimatorSettings,
    risk_mode: RiskMode,
}

impl RepeatContext<'_> {
    /// Run λ̂_V, the weighted selections and λ̂_Z on one source/target pair.
    /// `weight_features` are the inputs the estimators see (without any
    /// intercept column); `extra` adds further fixed weightings such as the
    /// true density ratio.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        source: &LabeledDataset,
        target: &LabeledDataset,
        source_weight_features: &DMatrix<f64>,
        target_weight_features: &DMatrix<f64>,
        extra: Vec<(Method, Result<WeightVector>)>,
        rng: &mut Rng,
        seed_path: (u64, &[u64]),
    ) -> Vec<(Method, std::result::Result<Selected, String>)> {
        let mut outcomes = Vec::new();
        let plan = crate::data::make_split_plan(source.len(), self.fold_count, rng);
        let cv = plan.and_then(|plan| CrossValidator::new(source, self.grid, &plan));

        let select = |weights: Option<&WeightVector>| -> std::result::Result<Selected, String> {
            match &cv {
                Ok(cv) => cv
                    .select(weights, self.risk_mode)
                    .map(|r| Selected::from(&r))
                    .map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            }
        };

        outcomes.push((Method::SourceCv, select(None)));
        for &estimator in self.estimators {
            let mut est_rng =
                crate::rng::rng_for(seed_path.0, &[seed_path.1, &[1000 + estimator as u64]].concat());
            let outcome = estimate(
                estimator,
                source_weight_features,
                target_weight_features,
                self.settings,
                &mut est_rng,
            )
            .map_err(|e| e.to_string())
            .and_then(|w| select(Some(&w)));
            outcomes.push((Method::Weighted(estimator), outcome));
        }
        for (method, weights) in extra {
            let outcome = weights.map_err(|e| e.to_string()).and_then(|w| select(Some(&w)));
            outcomes.push((method, outcome));
        }
        let target_outcome = crate::select::target_select(source, target, self.grid)
            .map(|r| Selected::from(&r))
            .map_err(|e| e.to_string());
        outcomes.push((Method::Target, target_outcome));
        outcomes
    }
}

fn count_failures(records: &[RepeatRecord]) -> (usize, usize) {
    let attempts = records.iter().map(|r| r.outcomes.len()).sum();
    let failures = records
        .iter()
        .flat_map(|r| &r.outcomes)
        .filter(|(_, o)| o.is_err())
        .count();
    (attempts, failures)
}

fn grid_label(cfg: &ExperimentConfig) -> String {
    format!("{}:{}:{}", cfg.grid_min, cfg.grid_max, cfg.grid_step)
}
