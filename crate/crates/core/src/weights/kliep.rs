//! Kullback–Leibler importance estimation.
//!
//! The ratio is modelled as `w(x) = Σ_l α_l k(x, c_l)` with one Gaussian
//! kernel centred on each target point and `α ≥ 0`. The target
//! log-likelihood `Σⱼ ln w(zⱼ)` is maximized under the normalization
//! `Σᵢ w(xᵢ) = n` by projected gradient ascent with an adaptive step: a
//! step is accepted only if the objective does not decrease.
//!
//! The normalization is a single constraint over the source sample; a
//! per-target-point version of it has no solution in general.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{check_same_dim, pooled, silverman_bandwidth, KernelConfig, WeightVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WidthCandidates {
    /// Multiples of the Silverman bandwidth of the pooled sample.
    Relative(Vec<f64>),
    Absolute(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KliepConfig {
    pub width_candidates: WidthCandidates,
    pub cv_folds: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for KliepConfig {
    fn default() -> Self {
        Self {
            width_candidates: WidthCandidates::Relative(vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0]),
            cv_folds: 3,
            max_iterations: 5000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KliepFit {
    pub weights: WeightVector,
    pub width: f64,
    pub alpha: DVector<f64>,
    /// Objective after each accepted step, starting from the initial point.
    pub objective_trace: Vec<f64>,
    /// Mean held-out log-likelihood per candidate width.
    pub cv_scores: Vec<(f64, f64)>,
}

struct Ascent {
    alpha: DVector<f64>,
    trace: Vec<f64>,
}

/// Projected gradient ascent on `Σⱼ ln (Aα)ⱼ` subject to `α ≥ 0`, `bᵀα = 1`.
fn ascend(a: &DMatrix<f64>, b: &DVector<f64>, cfg: &KliepConfig) -> Option<Ascent> {
    let objective = |alpha: &DVector<f64>| -> f64 {
        (a * alpha).iter().map(|v| v.ln()).sum()
    };
    let bb = b.norm_squared();
    if !(bb > 0.0) {
        return None;
    }
    let project = |mut alpha: DVector<f64>| -> Option<DVector<f64>> {
        let gap = 1.0 - b.dot(&alpha);
        alpha += b * (gap / bb);
        alpha.apply(|v| *v = v.max(0.0));
        let s = b.dot(&alpha);
        (s > 0.0 && s.is_finite()).then(|| alpha / s)
    };

    let mut alpha = DVector::from_element(b.len(), 1.0 / b.sum());
    let mut value = objective(&alpha);
    if !value.is_finite() {
        return None;
    }
    let mut trace = vec![value];
    let mut step = {
        let g = a.tr_mul(&(a * &alpha).map(|v| 1.0 / v));
        alpha.norm() / g.norm().max(f64::MIN_POSITIVE)
    };
    let mut rejections = 0;

    for _ in 0..cfg.max_iterations {
        let grad = a.tr_mul(&(a * &alpha).map(|v| 1.0 / v));
        let candidate = project(&alpha + &grad * step);
        let accepted = candidate.and_then(|c| {
            let v = objective(&c);
            (v.is_finite() && v >= value).then_some((c, v))
        });
        match accepted {
            Some((next, next_value)) => {
                let gain = next_value - value;
                alpha = next;
                value = next_value;
                trace.push(value);
                step *= 2.0;
                rejections = 0;
                if gain <= cfg.tolerance * (1.0 + value.abs()) {
                    break;
                }
            }
            None => {
                step *= 0.5;
                rejections += 1;
                if rejections > 60 {
                    break;
                }
            }
        }
    }
    Some(Ascent { alpha, trace })
}

fn width_values(source: &DMatrix<f64>, target: &DMatrix<f64>, cfg: &KliepConfig) -> Result<Vec<f64>> {
    let widths = match &cfg.width_candidates {
        WidthCandidates::Absolute(w) => w.clone(),
        WidthCandidates::Relative(factors) => {
            let base = silverman_bandwidth(&pooled(source, target))?;
            factors.iter().map(|f| f * base).collect()
        }
    };
    if widths.is_empty() || widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Config("KLIEP width candidates must be positive and nonempty".into()));
    }
    Ok(widths)
}

/// Fit the model for one width using `fit_targets` as both centres and
/// likelihood points.
fn fit_width(
    source: &DMatrix<f64>,
    fit_targets: &DMatrix<f64>,
    width: f64,
    cfg: &KliepConfig,
) -> Option<(KernelConfig, Ascent)> {
    let kernel = KernelConfig::new(width).ok()?;
    let a = kernel.gram(fit_targets, fit_targets);
    let b: DVector<f64> = kernel.gram(source, fit_targets).row_mean().transpose();
    ascend(&a, &b, cfg).map(|asc| (kernel, asc))
}

/// Fit KLIEP, choosing the kernel width by cross-validated held-out target
/// log-likelihood. `rng` shuffles the target folds.
pub fn fit_kliep<R: Rng + ?Sized>(
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    cfg: &KliepConfig,
    rng: &mut R,
) -> Result<KliepFit> {
    check_same_dim(source, target)?;
    let n = source.nrows();
    let m = target.nrows();
    if cfg.cv_folds < 2 {
        return Err(Error::Config("KLIEP needs at least 2 CV folds".into()));
    }
    if n < cfg.cv_folds || m < cfg.cv_folds {
        return Err(Error::Argument(format!(
            "KLIEP with {} folds needs at least that many source and target samples (n = {n}, m = {m})",
            cfg.cv_folds
        )));
    }
    let widths = width_values(source, target, cfg)?;

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let folds: Vec<Vec<usize>> = (0..cfg.cv_folds)
        .map(|k| order.iter().copied().skip(k).step_by(cfg.cv_folds).collect())
        .collect();

    let mut cv_scores = Vec::with_capacity(widths.len());
    for &width in &widths {
        let mut total = 0.0;
        for held in &folds {
            let keep: Vec<usize> = (0..m).filter(|i| !held.contains(i)).collect();
            let fit_targets = target.select_rows(&keep);
            let score = match fit_width(source, &fit_targets, width, cfg) {
                Some((kernel, asc)) => {
                    let held_out = target.select_rows(held);
                    let w = kernel.gram(&held_out, &fit_targets) * &asc.alpha;
                    w.iter().map(|v| v.ln()).sum::<f64>() / held.len() as f64
                }
                None => f64::NEG_INFINITY,
            };
            total += score;
        }
        let mean = total / folds.len() as f64;
        cv_scores.push((width, if mean.is_nan() { f64::NEG_INFINITY } else { mean }));
    }

    let (width, best) = cv_scores
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, (w, s)| if s > acc.1 { (w, s) } else { acc });
    if best == f64::NEG_INFINITY {
        return Err(Error::Estimation {
            message: "every KLIEP width candidate gave -inf held-out likelihood".into(),
            residual: f64::INFINITY,
        });
    }

    let (kernel, asc) = fit_width(source, target, width, cfg).ok_or_else(|| Error::Estimation {
        message: format!("KLIEP fit failed at width {width}"),
        residual: f64::INFINITY,
    })?;
    let weights = kernel.gram(source, target) * &asc.alpha;
    Ok(KliepFit {
        weights: WeightVector::new(weights.iter().copied().collect())?,
        width,
        alpha: asc.alpha,
        objective_trace: asc.trace,
        cv_scores,
    })
}

pub fn estimate_kliep<R: Rng + ?Sized>(
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    cfg: &KliepConfig,
    rng: &mut R,
) -> Result<WeightVector> {
    fit_kliep(source, target, cfg, rng).map(|fit| fit.weights)
}
