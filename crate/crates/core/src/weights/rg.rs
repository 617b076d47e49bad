//! Ratio of two maximum-likelihood Gaussian fits.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{check_same_dim, WeightVector};
use crate::error::{Error, Result};

struct GaussianFit {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl GaussianFit {
    fn new(x: &DMatrix<f64>, which: &str) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::Degenerate(format!(
                "{which} sample needs at least 2 rows for a Gaussian fit"
            )));
        }
        let mean = x.row_mean().transpose();
        let mut centered = x.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.tr_mul(&centered) / n as f64;

        let eig = cov.clone().symmetric_eigenvalues();
        let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bottom = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if !(bottom > top * 1e-12) {
            return Err(Error::Degenerate(format!(
                "{which} covariance is singular"
            )));
        }
        let chol = Cholesky::new(cov)
            .ok_or_else(|| Error::Degenerate(format!("{which} covariance is not positive definite")))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { mean, chol, log_det })
    }

    /// Log density up to the shared `−d/2 ln 2π` term.
    fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        let solved = self.chol.solve(&d);
        -0.5 * (d.dot(&solved) + self.log_det)
    }
}

/// `N(x | μ_T, Σ_T) / N(x | μ_S, Σ_S)` at every source row, with both
/// Gaussians fitted by maximum likelihood.
pub fn estimate_rg(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<WeightVector> {
    check_same_dim(source, target)?;
    let src = GaussianFit::new(source, "source")?;
    let tgt = GaussianFit::new(target, "target")?;
    let weights = source
        .row_iter()
        .map(|row| {
            let x = row.transpose();
            (tgt.ln_pdf(&x) - src.ln_pdf(&x)).exp()
        })
        .collect::<Vec<_>>();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Estimation {
            message: "density ratio overflowed".into(),
            residual: f64::INFINITY,
        });
    }
    WeightVector::new(weights)
}
