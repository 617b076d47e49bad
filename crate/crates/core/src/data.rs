//! Labeled datasets, UCI heart-disease ingestion and preprocessing.
//!
//! Raw values that were absent in the source file are stored as `NaN` and
//! flagged in the missing mask until [`preprocess`] imputes them.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Attribute names of the 14-column "processed" UCI heart-disease files,
/// excluding the trailing diagnosis column.
pub const UCI_HEART_FEATURES: [&str; 13] = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak",
    "slope", "ca", "thal",
];

/// Feature matrix with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    features: DMatrix<f64>,
    labels: Vec<f64>,
    feature_names: Vec<String>,
    missing_mask: DMatrix<bool>,
}

impl LabeledDataset {
    /// Build a fully observed dataset.
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        let mask = DMatrix::from_element(features.nrows(), features.ncols(), false);
        Self::with_missing(features, labels, names, mask)
    }

    /// Build a dataset where `missing_mask` marks absent raw values. Masked
    /// cells may hold any value (typically `NaN`); every other cell must be
    /// finite.
    pub fn with_missing(
        features: DMatrix<f64>,
        labels: Vec<f64>,
        feature_names: Vec<String>,
        missing_mask: DMatrix<bool>,
    ) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::Argument(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.nrows()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Argument(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        if missing_mask.shape() != features.shape() {
            return Err(Error::Argument(
                "missing mask shape differs from feature shape".into(),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::Argument(format!("label {bad} is not -1 or +1")));
        }
        let non_finite = features
            .iter()
            .zip(missing_mask.iter())
            .any(|(v, &missing)| !missing && !v.is_finite());
        if non_finite {
            return Err(Error::Argument(
                "non-finite feature value outside the missing mask".into(),
            ));
        }
        Ok(Self {
            name: String::new(),
            features,
            labels,
            feature_names,
            missing_mask,
        })
    }

    /// 1-d dataset from paired values and labels.
    pub fn from_columns(values: &[f64], labels: Vec<f64>) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values), labels)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn missing_mask(&self) -> &DMatrix<bool> {
        &self.missing_mask
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn has_missing(&self) -> bool {
        self.missing_mask.iter().any(|&m| m)
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            missing_mask: self.missing_mask.select_rows(indices),
        }
    }

    /// Append a constant-1 column (an intercept feature).
    pub fn with_bias_column(&self) -> Self {
        let n = self.len();
        let d = self.dim();
        let features = self.features.clone().insert_column(d, 1.0);
        let missing_mask = self.missing_mask.clone().insert_column(d, false);
        let mut feature_names = self.feature_names.clone();
        feature_names.push("bias".into());
        debug_assert_eq!(features.nrows(), n);
        Self {
            name: self.name.clone(),
            features,
            labels: self.labels.clone(),
            feature_names,
            missing_mask,
        }
    }
}

/// Cross-validation folds over `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    train_indices: Vec<Vec<usize>>,
    validation_indices: Vec<Vec<usize>>,
}

impl SplitPlan {
    /// Assemble a plan from explicit folds. Every index in `0..n` must be
    /// validated at least once; training and validation sets are not
    /// required to be disjoint, which allows resubstitution plans.
    pub fn from_parts(
        n: usize,
        train_indices: Vec<Vec<usize>>,
        validation_indices: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if train_indices.is_empty() || train_indices.len() != validation_indices.len() {
            return Err(Error::Argument(
                "split plan needs matching, nonempty train/validation lists".into(),
            ));
        }
        let mut seen = vec![false; n];
        for idx in train_indices.iter().chain(&validation_indices).flatten() {
            if *idx >= n {
                return Err(Error::Argument(format!("index {idx} out of range for n = {n}")));
            }
        }
        for &idx in validation_indices.iter().flatten() {
            seen[idx] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Argument(
                "every sample must appear in some validation set".into(),
            ));
        }
        if train_indices.iter().chain(&validation_indices).any(Vec::is_empty) {
            return Err(Error::Argument("empty fold".into()));
        }
        Ok(Self {
            train_indices,
            validation_indices,
        })
    }

    pub fn fold_count(&self) -> usize {
        self.train_indices.len()
    }

    pub fn train_indices(&self) -> &[Vec<usize>] {
        &self.train_indices
    }

    pub fn validation_indices(&self) -> &[Vec<usize>] {
        &self.validation_indices
    }

    pub fn folds(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.train_indices
            .iter()
            .zip(&self.validation_indices)
            .map(|(t, v)| (t.as_slice(), v.as_slice()))
    }
}

/// Random partition of `0..n` into `fold_count` near-equal validation folds.
pub fn make_split_plan<R: Rng + ?Sized>(
    n: usize,
    fold_count: usize,
    rng: &mut R,
) -> Result<SplitPlan> {
    if fold_count < 2 || fold_count > n {
        return Err(Error::Argument(format!(
            "fold count {fold_count} outside [2, {n}]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let base = n / fold_count;
    let extra = n % fold_count;
    let mut validation = Vec::with_capacity(fold_count);
    let mut start = 0;
    for k in 0..fold_count {
        let size = base + usize::from(k < extra);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        validation.push(fold);
        start += size;
    }
    let train = validation
        .iter()
        .map(|fold| {
            let held: BTreeSet<usize> = fold.iter().copied().collect();
            (0..n).filter(|i| !held.contains(i)).collect()
        })
        .collect();
    Ok(SplitPlan {
        train_indices: train,
        validation_indices: validation,
    })
}

/// Parse a "processed" UCI heart-disease file: 13 attributes plus a
/// diagnosis column, `?` for missing cells. Diagnosis 0 maps to −1, any
/// positive value to +1.
pub fn load_uci_heart(path: impl AsRef<Path>, domain_name: &str) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_uci_heart(&text, &path.display().to_string()).map(|d| d.named(domain_name))
}

/// Parse UCI heart-disease text; `origin` names the source in errors.
pub fn parse_uci_heart(text: &str, origin: &str) -> Result<LabeledDataset> {
    let d = UCI_HEART_FEATURES.len();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut labels = Vec::new();

    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != d + 1 {
            return Err(parse_err(
                lineno + 1,
                format!("expected {} columns, found {}", d + 1, cells.len()),
            ));
        }
        for (j, cell) in cells[..d].iter().enumerate() {
            if *cell == "?" {
                values.push(f64::NAN);
                mask.push(true);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_err(
                        lineno + 1,
                        format!("column {} ({}): '{cell}' is not numeric", j + 1, UCI_HEART_FEATURES[j]),
                    )
                })?;
                values.push(v);
                mask.push(false);
            }
        }
        let diagnosis: f64 = cells[d].parse().map_err(|_| {
            parse_err(
                lineno + 1,
                format!("diagnosis '{}' is not numeric", cells[d]),
            )
        })?;
        labels.push(if diagnosis > 0.0 { 1.0 } else { -1.0 });
    }

    let n = labels.len();
    let features = DMatrix::from_row_slice(n, d, &values);
    let missing_mask = DMatrix::from_row_slice(n, d, &mask);
    LabeledDataset::with_missing(
        features,
        labels,
        UCI_HEART_FEATURES.iter().map(|s| s.to_string()).collect(),
        missing_mask,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovedFeature {
    pub name: String,
    pub missing_fraction: f64,
}

/// What [`preprocess`] did to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreprocessReport {
    pub removed_features: Vec<RemovedFeature>,
    pub per_feature_mean: Vec<f64>,
    pub per_feature_std: Vec<f64>,
    /// Retained features whose observed values are constant.
    pub zero_variance: Vec<String>,
}

/// Fraction of missing cells in each column.
pub fn missing_fractions(data: &LabeledDataset) -> Vec<f64> {
    let n = data.len().max(1) as f64;
    data.missing_mask
        .column_iter()
        .map(|col| col.iter().filter(|&&m| m).count() as f64 / n)
        .collect()
}

/// Drop features missing in more than `missing_removal_threshold` of the
/// rows, z-score the rest over their observed entries (population standard
/// deviation, divisor 1 for constant columns), then impute missing cells
/// with 0.
pub fn preprocess(
    data: &LabeledDataset,
    missing_removal_threshold: f64,
) -> Result<(LabeledDataset, PreprocessReport)> {
    let remove: BTreeSet<usize> = missing_fractions(data)
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > missing_removal_threshold)
        .map(|(j, _)| j)
        .collect();
    preprocess_removing(data, &remove)
}

/// Preprocess several domains so they share a feature set: a feature is
/// dropped everywhere when it exceeds the threshold in any domain. Each
/// domain is then standardized with its own statistics.
pub fn preprocess_domains(
    domains: &[LabeledDataset],
    missing_removal_threshold: f64,
) -> Result<Vec<(LabeledDataset, PreprocessReport)>> {
    let Some(first) = domains.first() else {
        return Ok(Vec::new());
    };
    if domains.iter().any(|d| d.feature_names != first.feature_names) {
        return Err(Error::Argument("domains have different feature sets".into()));
    }
    let mut remove = BTreeSet::new();
    for domain in domains {
        for (j, f) in missing_fractions(domain).into_iter().enumerate() {
            if f > missing_removal_threshold {
                remove.insert(j);
            }
        }
    }
    domains
        .iter()
        .map(|d| preprocess_removing(d, &remove))
        .collect()
}

fn preprocess_removing(
    data: &LabeledDataset,
    remove: &BTreeSet<usize>,
) -> Result<(LabeledDataset, PreprocessReport)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "preprocessing needs at least 2 samples, got {n}"
        )));
    }
    let fractions = missing_fractions(data);
    let keep: Vec<usize> = (0..data.dim()).filter(|j| !remove.contains(j)).collect();
    if keep.is_empty() {
        return Err(Error::Config(format!(
            "every feature of '{}' was removed by the missing-value threshold",
            data.name
        )));
    }

    let mut features = DMatrix::zeros(n, keep.len());
    let mut means = Vec::with_capacity(keep.len());
    let mut stds = Vec::with_capacity(keep.len());
    let mut zero_variance = Vec::new();

    for (out_j, &j) in keep.iter().enumerate() {
        let observed: Vec<f64> = (0..n)
            .filter(|&i| !data.missing_mask[(i, j)])
            .map(|i| data.features[(i, j)])
            .collect();
        let count = observed.len() as f64;
        let (mean, std) = if observed.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = observed.iter().sum::<f64>() / count;
            let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
            (mean, var.sqrt())
        };
        let divisor = if std > 0.0 {
            std
        } else {
            zero_variance.push(data.feature_names[j].clone());
            1.0
        };
        for i in 0..n {
            features[(i, out_j)] = if data.missing_mask[(i, j)] {
                0.0
            } else {
                (data.features[(i, j)] - mean) / divisor
            };
        }
        means.push(mean);
        stds.push(std);
    }

    let report = PreprocessReport {
        removed_features: remove
            .iter()
            .map(|&j| RemovedFeature {
                name: data.feature_names[j].clone(),
                missing_fraction: fractions[j],
            })
            .collect(),
        per_feature_mean: means,
        per_feature_std: stds,
        zero_variance,
    };
    let cleaned = LabeledDataset {
        name: data.name.clone(),
        features,
        labels: data.labels.clone(),
        feature_names: keep.iter().map(|&j| data.feature_names[j].clone()).collect(),
        missing_mask: data.missing_mask.select_columns(&keep),
    };
    Ok((cleaned, report))
}
