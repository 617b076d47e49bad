//! λ grids and grid-search selection of the regularization parameter.
//!
//! Three selectors share one engine:
//! source cross-validation (`λ̂_V`), importance-weighted source
//! cross-validation (`λ̂_W`) and the oracle that scores on labeled target
//! data (`λ̂_Z`). Grid points whose shifted system is singular in any fold
//! get `+∞` risk and never win the argmin.

use serde::Serialize;

use crate::data::{LabeledDataset, SplitPlan};
use crate::error::{Error, Result};
use crate::ridge::{RidgePath, RiskMode, ValidationMoments};
use crate::weights::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("lambda grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(
                "lambda grid must be finite and strictly ascending".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `min, min + step, …` up to and including `max` (within rounding).
    pub fn linear(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Argument(format!("grid step {step} must be positive")));
        }
        if !(min < max) {
            return Err(Error::Argument(format!("grid bounds [{min}, {max}] are not increasing")));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|k| min + k as f64 * step).collect())
    }

    /// `{0, 0.01, 0.1, 1, 10, 100, 1000}`.
    pub fn exponential() -> Self {
        Self {
            values: vec![0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub grid: LambdaGrid,
    /// Mean validation risk per grid point; `+∞` where infeasible.
    pub risk_curve: Vec<f64>,
    pub lambda_hat: f64,
    pub lambda_hat_index: usize,
    pub infeasible_count: usize,
    /// The selected λ sits on a grid endpoint.
    pub boundary: bool,
    /// Mean number of training samples behind each fitted classifier; λ̂
    /// divided by this is the parameter for an averaged training loss.
    pub training_size: f64,
}

impl SelectionResult {
    fn from_curve(grid: &LambdaGrid, risk_curve: Vec<f64>, training_size: f64) -> Result<Self> {
        let infeasible_count = risk_curve.iter().filter(|r| !r.is_finite()).count();
        let mut best: Option<usize> = None;
        for (i, r) in risk_curve.iter().enumerate() {
            if r.is_finite() && best.is_none_or(|b| *r < risk_curve[b]) {
                best = Some(i);
            }
        }
        let index = best.ok_or_else(|| Error::Selection("every lambda on the grid is infeasible".into()))?;
        Ok(Self {
            grid: grid.clone(),
            lambda_hat: grid.values[index],
            lambda_hat_index: index,
            boundary: index == 0 || index + 1 == grid.len(),
            risk_curve,
            infeasible_count,
            training_size,
        })
    }

    pub fn lambda_hat_averaged(&self) -> f64 {
        self.lambda_hat / self.training_size
    }
}

struct Fold {
    path: RidgePath,
    validation: Vec<usize>,
    train_size: usize,
}

/// Cross-validation over a fixed split plan. Each fold's training Gram
/// matrix is factored once and reused for every grid point and every
/// weighting of the validation risk.
pub struct CrossValidator<'a> {
    source: &'a LabeledDataset,
    grid: &'a LambdaGrid,
    folds: Vec<Fold>,
    /// Classifier for each (fold, grid point); `None` where singular.
    fits: Vec<Vec<Option<crate::ridge::LinearClassifier>>>,
}

impl<'a> CrossValidator<'a> {
    pub fn new(source: &'a LabeledDataset, grid: &'a LambdaGrid, plan: &SplitPlan) -> Result<Self> {
        let n = source.len();
        let mut folds = Vec::with_capacity(plan.fold_count());
        for (train, validation) in plan.folds() {
            if train.iter().chain(validation).any(|&i| i >= n) {
                return Err(Error::Argument(format!(
                    "split plan indexes beyond {n} source samples"
                )));
            }
            let x = source.features().select_rows(train);
            let y: Vec<f64> = train.iter().map(|&i| source.labels()[i]).collect();
            folds.push(Fold {
                path: RidgePath::new(&x, &y)?,
                validation: validation.to_vec(),
                train_size: train.len(),
            });
        }
        let fits = folds
            .iter()
            .map(|fold| grid.values().iter().map(|&l| fold.path.solve(l).ok()).collect())
            .collect();
        Ok(Self {
            source,
            grid,
            folds,
            fits,
        })
    }

    /// Unweighted (`weights = None`) or importance-weighted selection.
    pub fn select(&self, weights: Option<&WeightVector>, mode: RiskMode) -> Result<SelectionResult> {
        if let Some(w) = weights {
            if w.len() != self.source.len() {
                return Err(Error::Argument(format!(
                    "{} weights for {} source samples",
                    w.len(),
                    self.source.len()
                )));
            }
        }
        let mut curve = vec![0.0; self.grid.len()];
        for (fold, fits) in self.folds.iter().zip(&self.fits) {
            let x = self.source.features().select_rows(&fold.validation);
            let y: Vec<f64> = fold.validation.iter().map(|&i| self.source.labels()[i]).collect();
            let moments = match weights {
                None => ValidationMoments::unweighted(&x, &y)?,
                Some(w) => ValidationMoments::weighted(&x, &y, &w.restrict(&fold.validation), mode)?,
            };
            if fits.iter().all(Option::is_none) {
                return Err(Error::Selection("every lambda is infeasible on a fold".into()));
            }
            for (slot, fit) in curve.iter_mut().zip(fits) {
                *slot += match fit {
                    Some(h) => moments.risk(h),
                    None => f64::INFINITY,
                };
            }
        }
        let k = self.folds.len() as f64;
        curve.iter_mut().for_each(|r| *r /= k);
        let train_size = self.folds.iter().map(|f| f.train_size as f64).sum::<f64>() / k;
        SelectionResult::from_curve(self.grid, curve, train_size)
    }
}

/// Cross-validated λ selection; importance-weighted when `weights` is given
/// (risk form [`RiskMode::AsPrinted`]).
pub fn cv_select(
    source: &LabeledDataset,
    grid: &LambdaGrid,
    plan: &SplitPlan,
    weights: Option<&WeightVector>,
) -> Result<SelectionResult> {
    CrossValidator::new(source, grid, plan)?.select(weights, RiskMode::AsPrinted)
}

/// Oracle selection: train on the whole source sample and score on the
/// labeled target sample.
pub fn target_select(
    source: &LabeledDataset,
    target: &LabeledDataset,
    grid: &LambdaGrid,
) -> Result<SelectionResult> {
    if source.dim() != target.dim() {
        return Err(Error::Argument("source and target dimensions differ".into()));
    }
    let path = RidgePath::new(source.features(), source.labels())?;
    let moments = ValidationMoments::unweighted(target.features(), target.labels())?;
    let curve = grid
        .values()
        .iter()
        .map(|&l| path.solve(l).map_or(f64::INFINITY, |h| moments.risk(&h)))
        .collect();
    SelectionResult::from_curve(grid, curve, source.len() as f64)
}
