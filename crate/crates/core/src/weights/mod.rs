//! Importance-weight estimators.
//!
//! Each estimator maps a source sample and an unlabeled target sample
//! (rows are observations) to one nonnegative weight per source row,
//! approximating `p_Z(x) / p_X(x)`.

mod kliep;
mod kmm;
mod nn;
mod qp;
mod rg;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use kliep::{estimate_kliep, fit_kliep, KliepConfig, KliepFit, WidthCandidates};
pub use kmm::{estimate_kmm, KmmConfig};
pub use nn::estimate_nn;
pub use qp::{solve_box_sum_qp, BoxSumQp, QpSolution};
pub use rg::estimate_rg;

/// Per-sample importance weights; all entries finite and nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Argument(format!(
                "importance weights must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn ones(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
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

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    /// Weights at `indices`, in that order.
    pub fn restrict(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.values[i]).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConfig {
    bandwidth: f64,
}

impl KernelConfig {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Argument(format!(
                "kernel bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Gram matrix `K[i, j] = k(a_i, b_j)` between the rows of `a` and `b`.
    pub fn gram(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let denom = 2.0 * self.bandwidth * self.bandwidth;
        DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
            let d2: f64 = a.row(i).iter().zip(b.row(j).iter()).map(|(p, q)| (p - q).powi(2)).sum();
            (-d2 / denom).exp()
        })
    }
}

/// `exp(−‖a − b‖² / (2σ²))`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Silverman's rule `1.06 σ̂ n^(−1/5)` per dimension (σ̂ the sample standard
/// deviation), averaged over the dimensions that have any spread.
pub fn silverman_bandwidth(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "bandwidth selection needs at least 2 samples, got {n}"
        )));
    }
    let factor = 1.06 * (n as f64).powf(-0.2);
    let spreads: Vec<f64> = x
        .column_iter()
        .map(|col| {
            let mean = col.mean();
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        })
        .filter(|s| *s > 0.0)
        .collect();
    if spreads.is_empty() {
        return Err(Error::Degenerate(
            "bandwidth selection on data with zero spread".into(),
        ));
    }
    Ok(factor * spreads.iter().sum::<f64>() / spreads.len() as f64)
}

/// Rows of `a` stacked on top of rows of `b`.
pub(crate) fn pooled(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

fn check_same_dim(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<()> {
    if source.ncols() != target.ncols() {
        return Err(Error::Argument(format!(
            "source has {} features, target has {}",
            source.ncols(),
            target.ncols()
        )));
    }
    Ok(())
}

/// The four importance-weight estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Estimator {
    RatioOfGaussians,
    Kliep,
    Kmm,
    NearestNeighbor,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::RatioOfGaussians,
        Estimator::Kliep,
        Estimator::Kmm,
        Estimator::NearestNeighbor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::RatioOfGaussians => "rg",
            Estimator::Kliep => "kliep",
            Estimator::Kmm => "kmm",
            Estimator::NearestNeighbor => "nn",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Estimator::RatioOfGaussians => "rG",
            Estimator::Kliep => "KLIEP",
            Estimator::Kmm => "KMM",
            Estimator::NearestNeighbor => "NN",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}' (expected rg, kliep, kmm or nn)")))
    }
}

/// Hyperparameters for every estimator.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EstimatorSettings {
    pub kliep: KliepConfig,
    pub kmm: KmmConfig,
}

/// Run one estimator. Only KLIEP consumes randomness (its width
/// cross-validation split).
pub fn estimate<R: Rng + ?Sized>(
    estimator: Estimator,
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    settings: &EstimatorSettings,
    rng: &mut R,
) -> Result<WeightVector> {
    match estimator {
        Estimator::RatioOfGaussians => estimate_rg(source, target),
        Estimator::Kliep => estimate_kliep(source, target, &settings.kliep, rng),
        Estimator::Kmm => estimate_kmm(source, target, &settings.kmm),
        Estimator::NearestNeighbor => estimate_nn(source, target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn kernel_values() {
        assert_eq!(gaussian_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.7), 1.0);
        let sigma = 0.8;
        let k = gaussian_kernel(&[0.0], &[sigma * 2f64.sqrt()], sigma);
        assert_abs_diff_eq!(k, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(k, 0.367879, epsilon = 1e-6);
        let a = [0.3, -1.0, 2.0];
        let b = [1.1, 0.4, -0.2];
        assert_eq!(gaussian_kernel(&a, &b, 1.3), gaussian_kernel(&b, &a, 1.3));
    }

    #[test]
    fn gram_matches_pointwise_kernel() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, -1.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, -2.0, 0.5]);
        let k = KernelConfig::new(0.9).unwrap().gram(&a, &b);
        for i in 0..2 {
            for j in 0..3 {
                let pa: Vec<f64> = a.row(i).iter().copied().collect();
                let pb: Vec<f64> = b.row(j).iter().copied().collect();
                assert_abs_diff_eq!(k[(i, j)], gaussian_kernel(&pa, &pb, 0.9), epsilon = 1e-15);
            }
        }
        assert!(KernelConfig::new(0.0).is_err());
    }

    #[test]
    fn silverman_rule() {
        let mut rng = rng_for(11, &[]);
        let draws: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = DMatrix::from_column_slice(100, 1, &draws);
        let bw = silverman_bandwidth(&x).unwrap();
        let mean = draws.iter().sum::<f64>() / 100.0;
        let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert_abs_diff_eq!(bw, 1.06 * sd * 100f64.powf(-0.2), epsilon = 1e-12);
        // σ̂ of 100 normal draws is within ~0.2 of 1
        assert!((bw - 0.4222).abs() < 0.1, "{bw}");

        let scaled = silverman_bandwidth(&(&x * 5.0)).unwrap();
        assert_abs_diff_eq!(scaled, 5.0 * bw, epsilon = 1e-12);

        let flat = DMatrix::from_column_slice(2, 1, &[0.0, 0.0]);
        assert!(matches!(silverman_bandwidth(&flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("ulsif".parse::<Estimator>().is_err());
    }

    #[test]
    fn weight_vector_rejects_negative() {
        assert!(WeightVector::new(vec![1.0, -0.1]).is_err());
        assert!(WeightVector::new(vec![f64::INFINITY]).is_err());
        assert!(WeightVector::new(vec![0.0, 2.0]).is_ok());
    }
}
