//! Kernel mean matching.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::qp::BoxSumQp;
use super::{check_same_dim, pooled, silverman_bandwidth, KernelConfig, WeightVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmmConfig {
    /// Upper bound B on each weight.
    pub upper_bound: f64,
    /// Allowed relative deviation ε of Σw from n; `None` means B/√n.
    pub sum_slack: Option<f64>,
    /// Kernel bandwidth; `None` applies Silverman's rule to the pooled sample.
    pub bandwidth: Option<f64>,
    pub solver_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KmmConfig {
    fn default() -> Self {
        Self {
            upper_bound: 1000.0,
            sum_slack: None,
            bandwidth: None,
            solver_tolerance: 1e-6,
            max_iterations: 50_000,
        }
    }
}

/// Minimize `½ wᵀK_ss w − κᵀw` with `κᵢ = (n/m) Σⱼ k(xᵢ, zⱼ)` subject to
/// `0 ≤ wᵢ ≤ B` and `|Σw − n| ≤ nε`.
pub fn estimate_kmm(
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    cfg: &KmmConfig,
) -> Result<WeightVector> {
    check_same_dim(source, target)?;
    let n = source.nrows();
    let m = target.nrows();
    if n == 0 || m == 0 {
        return Err(Error::Argument("KMM needs nonempty source and target".into()));
    }
    if !(cfg.upper_bound > 0.0) {
        return Err(Error::Config(format!("KMM upper bound {} must be positive", cfg.upper_bound)));
    }
    let eps = cfg.sum_slack.unwrap_or(cfg.upper_bound / (n as f64).sqrt());
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("KMM sum slack {eps} must be nonnegative")));
    }

    let bandwidth = match cfg.bandwidth {
        Some(bw) => bw,
        None => match silverman_bandwidth(&pooled(source, target)) {
            Ok(bw) => bw,
            // all points coincide; any bandwidth gives the same Gram matrix
            Err(Error::Degenerate(_)) => 1.0,
            Err(e) => return Err(e),
        },
    };
    let kernel = KernelConfig::new(bandwidth)?;
    let k_ss = kernel.gram(source, source);
    let k_st = kernel.gram(source, target);
    let kappa: DVector<f64> = k_st.column_sum() * (n as f64 / m as f64);

    let qp = BoxSumQp {
        upper: cfg.upper_bound,
        sum_target: n as f64,
        sum_slack: n as f64 * eps,
        tolerance: cfg.solver_tolerance,
        max_iterations: cfg.max_iterations,
    };
    let solution = qp.solve(&k_ss, &kappa)?;
    WeightVector::new(solution.x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_point_gets_unit_weight() {
        let x = DMatrix::from_element(1, 1, 0.3);
        let w = estimate_kmm(&x, &x, &KmmConfig::default()).unwrap();
        assert_abs_diff_eq!(w.values()[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn feasibility_is_exact() {
        let source = DMatrix::from_column_slice(6, 1, &[-2.0, -1.0, -0.5, 0.0, 0.4, 1.5]);
        let target = DMatrix::from_column_slice(4, 1, &[-0.1, 0.0, 0.2, 0.1]);
        let cfg = KmmConfig {
            upper_bound: 2.0,
            sum_slack: Some(0.1),
            ..KmmConfig::default()
        };
        let w = estimate_kmm(&source, &target, &cfg).unwrap();
        assert!(w.values().iter().all(|&v| (0.0..=2.0).contains(&v)));
        let total: f64 = w.values().iter().sum();
        assert!((total - 6.0).abs() <= 6.0 * 0.1, "{total}");
        // mass moves toward the target cluster
        assert!(w.values()[3] > w.values()[0]);
    }
}
