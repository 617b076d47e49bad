//! Regularized least-squares classifiers.
//!
//! The fitted weights are `(XᵀX + λI)⁻¹Xᵀy`, i.e. the minimizer of
//! `‖Xh − y‖² + λ‖h‖²` with an unaveraged loss. Dividing λ by the training
//! size gives the equivalent parameter for an averaged loss. Negative λ is
//! accepted; the shifted system is solved through the eigendecomposition of
//! the Gram matrix and rejected only when it is numerically singular.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightVector;

/// Shifted systems whose eigenvalues span more than this ratio are singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weights: DVector<f64>,
}

impl LinearClassifier {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Argument("classifier weights must be finite".into()));
        }
        Ok(Self { weights })
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(weights))
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.weights
    }
}

/// Eigendecomposition of a Gram matrix, reusable across many λ.
#[derive(Debug, Clone)]
pub struct RidgePath {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `Qᵀ Xᵀy`
    projected_rhs: DVector<f64>,
}

impl RidgePath {
    pub fn new(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        check_rows(x, y.len())?;
        let y = DVector::from_column_slice(y);
        Ok(Self::from_normal_equations(x.tr_mul(x), x.tr_mul(&y)))
    }

    /// Path for the system `(G + λI) h = r`.
    pub fn from_normal_equations(gram: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        let eigen = SymmetricEigen::new(gram);
        let projected_rhs = eigen.eigenvectors.tr_mul(&rhs);
        Self {
            eigenvalues: eigen.eigenvalues,
            eigenvectors: eigen.eigenvectors,
            projected_rhs,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn solve(&self, lambda: f64) -> Result<LinearClassifier> {
        let shifted = self.eigenvalues.add_scalar(lambda);
        let largest = shifted.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let smallest = shifted.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
        if !(smallest > 0.0) || largest / smallest > MAX_CONDITION {
            return Err(Error::Singular { lambda });
        }
        let scaled = self.projected_rhs.component_div(&shifted);
        LinearClassifier::new(&self.eigenvectors * scaled).map_err(|_| Error::Singular { lambda })
    }
}

fn check_rows(x: &DMatrix<f64>, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::Argument(format!(
            "{} rows but {} labels/weights",
            x.nrows(),
            n
        )));
    }
    if n == 0 {
        return Err(Error::Argument("empty data".into()));
    }
    Ok(())
}

/// Ridge solution `(XᵀX + λI)⁻¹Xᵀy`.
pub fn fit_ridge(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<LinearClassifier> {
    RidgePath::new(x, y)?.solve(lambda)
}

/// How the importance-weighted risk treats the constant `yᵀWy/n` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RiskMode {
    /// Constant term fixed at 1, as when all weights are one.
    #[default]
    AsPrinted,
    /// `(1/n) Σ wᵢ (h(xᵢ) − yᵢ)²`.
    FullyWeighted,
}

impl RiskMode {
    pub fn name(self) -> &'static str {
        match self {
            RiskMode::AsPrinted => "as-printed",
            RiskMode::FullyWeighted => "fully-weighted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "as-printed" => Some(RiskMode::AsPrinted),
            "fully-weighted" => Some(RiskMode::FullyWeighted),
            _ => None,
        }
    }
}

/// Sufficient statistics of a (weighted) validation set:
/// `risk(h) = c − (2/n) rᵀh + (1/n) hᵀGh` with `G = XᵀWX`, `r = XᵀWy`.
#[derive(Debug, Clone)]
pub struct ValidationMoments {
    count: usize,
    constant: f64,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
}

impl ValidationMoments {
    pub fn unweighted(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        check_rows(x, y.len())?;
        let y = DVector::from_column_slice(y);
        Ok(Self {
            count: x.nrows(),
            constant: 1.0,
            gram: x.tr_mul(x),
            cross: x.tr_mul(&y),
        })
    }

    pub fn weighted(x: &DMatrix<f64>, y: &[f64], w: &[f64], mode: RiskMode) -> Result<Self> {
        check_rows(x, y.len())?;
        check_rows(x, w.len())?;
        if let Some(bad) = w.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Argument(format!("invalid importance weight {bad}")));
        }
        let n = x.nrows();
        let mut wx = x.clone();
        for (mut row, &wi) in wx.row_iter_mut().zip(w) {
            row *= wi;
        }
        let y_vec = DVector::from_column_slice(y);
        let constant = match mode {
            RiskMode::AsPrinted => 1.0,
            RiskMode::FullyWeighted => {
                y.iter().zip(w).map(|(yi, wi)| wi * yi * yi).sum::<f64>() / n as f64
            }
        };
        Ok(Self {
            count: n,
            constant,
            gram: wx.tr_mul(x),
            cross: wx.tr_mul(&y_vec),
        })
    }

    pub fn risk(&self, h: &LinearClassifier) -> f64 {
        let n = self.count as f64;
        let h = h.weights();
        self.constant - 2.0 / n * self.cross.dot(h) + (&self.gram * h).dot(h) / n
    }
}

/// Validation MSE in its expanded form `1 − (2/n) yᵀXh + (1/n) hᵀXᵀXh`;
/// equal to `(1/n)‖Xh − y‖²` for ±1 labels.
pub fn mse(h: &LinearClassifier, x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    Ok(ValidationMoments::unweighted(x, y)?.risk(h))
}

/// `(1/n)‖Xh − y‖²` computed from residuals.
pub fn residual_mse(h: &LinearClassifier, x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    check_rows(x, y.len())?;
    let pred = h.predict(x);
    Ok(pred
        .iter()
        .zip(y)
        .map(|(p, yi)| (p - yi).powi(2))
        .sum::<f64>()
        / y.len() as f64)
}

/// Importance-weighted validation MSE.
pub fn weighted_mse(
    h: &LinearClassifier,
    x: &DMatrix<f64>,
    y: &[f64],
    w: &WeightVector,
    mode: RiskMode,
) -> Result<f64> {
    Ok(ValidationMoments::weighted(x, y, w.values(), mode)?.risk(h))
}

/// λ-free minimizer `(XᵀWX)⁻¹XᵀWy` of the weighted risk.
pub fn weighted_ridge_minimizer(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &WeightVector,
) -> Result<LinearClassifier> {
    let m = ValidationMoments::weighted(x, y, w.values(), RiskMode::AsPrinted)?;
    RidgePath::from_normal_equations(m.gram, m.cross).solve(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvdSpectrum {
    pub singular_values: Vec<f64>,
    /// `α/α² = 1/α` for each nonzero singular value; `None` for zero ones.
    pub inverse_spectrum: Vec<Option<f64>>,
}

pub fn svd_spectrum(x: &DMatrix<f64>) -> SvdSpectrum {
    let mut singular_values: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let top = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = top * f64::EPSILON * x.nrows().max(x.ncols()) as f64;
    let inverse_spectrum = singular_values
        .iter()
        .map(|&a| (a > cutoff && a > 0.0).then(|| a / (a * a)))
        .collect();
    SvdSpectrum {
        singular_values,
        inverse_spectrum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn h(v: &[f64]) -> LinearClassifier {
        LinearClassifier::from_slice(v).unwrap()
    }

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn scalar_fits() {
        let fit = fit_ridge(&col(&[2.0]), &[1.0], 0.0).unwrap();
        assert_abs_diff_eq!(fit.weights()[0], 0.5, epsilon = 1e-15);
        let fit = fit_ridge(&col(&[2.0]), &[1.0], 4.0).unwrap();
        assert_abs_diff_eq!(fit.weights()[0], 0.25, epsilon = 1e-15);
        let fit = fit_ridge(&col(&[1.0, -1.0]), &[1.0, -1.0], 0.0).unwrap();
        assert_abs_diff_eq!(fit.weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn singular_shift_is_reported() {
        let err = fit_ridge(&col(&[1.0]), &[1.0], -1.0).unwrap_err();
        assert!(matches!(err, Error::Singular { lambda } if lambda == -1.0));
        // rank deficient without regularization
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(fit_ridge(&x, &[1.0, -1.0], 0.0).is_err());
        assert!(fit_ridge(&x, &[1.0, -1.0], 0.5).is_ok());
    }

    #[test]
    fn negative_lambda_is_solved_when_nonsingular() {
        // XᵀX = 8, λ = −4 → h = 4 / 4
        let fit = fit_ridge(&col(&[2.0, 2.0]), &[1.0, 1.0], -4.0).unwrap();
        assert_abs_diff_eq!(fit.weights()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mse_examples() {
        assert_abs_diff_eq!(mse(&h(&[0.5]), &col(&[2.0]), &[1.0]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mse(&h(&[0.0]), &col(&[2.0, -3.0]), &[1.0, -1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(
            mse(&h(&[0.5]), &col(&[1.0, -1.0]), &[1.0, -1.0]).unwrap(),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn weighted_mse_modes_differ_in_constant() {
        let x = col(&[1.0]);
        let printed = weighted_mse(&h(&[0.0]), &x, &[1.0], &wv(&[2.0]), RiskMode::AsPrinted).unwrap();
        let full = weighted_mse(&h(&[0.0]), &x, &[1.0], &wv(&[2.0]), RiskMode::FullyWeighted).unwrap();
        assert_abs_diff_eq!(printed, 1.0);
        assert_abs_diff_eq!(full, 2.0);
    }

    #[test]
    fn unit_weights_reduce_to_mse() {
        let x = col(&[0.3, -1.2, 2.0, 0.7]);
        let y = [1.0, -1.0, 1.0, -1.0];
        let c = h(&[0.4]);
        let plain = mse(&c, &x, &y).unwrap();
        for mode in [RiskMode::AsPrinted, RiskMode::FullyWeighted] {
            let weighted = weighted_mse(&c, &x, &y, &wv(&[1.0; 4]), mode).unwrap();
            assert_abs_diff_eq!(weighted, plain, epsilon = 1e-12);
        }
    }

    #[test]
    fn negative_weight_rejected() {
        let res = ValidationMoments::weighted(&col(&[1.0]), &[1.0], &[-1.0], RiskMode::AsPrinted);
        assert!(matches!(res, Err(Error::Argument(_))));
    }

    #[test]
    fn weighted_minimizer_examples() {
        let fit = weighted_ridge_minimizer(&col(&[1.0, 2.0]), &[1.0, 1.0], &wv(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(fit.weights()[0], 1.0, epsilon = 1e-12);
        let fit = weighted_ridge_minimizer(&col(&[1.0, 1.0]), &[1.0, -1.0], &wv(&[3.0, 1.0])).unwrap();
        assert_abs_diff_eq!(fit.weights()[0], 0.5, epsilon = 1e-12);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.8, -1.0]);
        let y = [1.0, -1.0, 1.0];
        let a = weighted_ridge_minimizer(&x, &y, &wv(&[1.0; 3])).unwrap();
        let b = fit_ridge(&x, &y, 0.0).unwrap();
        assert_abs_diff_eq!((a.weights() - b.weights()).amax(), 0.0, epsilon = 1e-10);
        assert!(weighted_ridge_minimizer(&col(&[1.0, 2.0]), &[1.0, 1.0], &wv(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let s = svd_spectrum(&DMatrix::identity(2, 2));
        assert_eq!(s.singular_values, vec![1.0, 1.0]);
        assert_eq!(s.inverse_spectrum, vec![Some(1.0), Some(1.0)]);

        let s = svd_spectrum(&DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]));
        assert_abs_diff_eq!(s.singular_values[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.singular_values[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.inverse_spectrum[0].unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.inverse_spectrum[1].unwrap(), 1.0 / 3.0, epsilon = 1e-12);

        let s = svd_spectrum(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(s.inverse_spectrum[1], None);
    }

    #[test]
    fn spectrum_scales_with_data() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 2.2, 1.0]);
        let a = svd_spectrum(&x);
        let b = svd_spectrum(&(&x * 3.0));
        for i in 0..2 {
            assert_abs_diff_eq!(b.singular_values[i], 3.0 * a.singular_values[i], epsilon = 1e-10);
            assert_abs_diff_eq!(
                b.inverse_spectrum[i].unwrap(),
                a.inverse_spectrum[i].unwrap() / 3.0,
                epsilon = 1e-10
            );
        }
    }
}
