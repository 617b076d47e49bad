//! Reference computations shared by the integration test targets.
#![allow(dead_code)]

use covshift::shift::GaussianMixture;
use covshift::{GaussianSpec, ShiftProblem};

pub fn kernel_matrix(a: &[f64], b: &[f64], bw: f64) -> Vec<Vec<f64>> {
    a.iter()
        .map(|x| b.iter().map(|z| (-(x - z) * (x - z) / (2.0 * bw * bw)).exp()).collect())
        .collect()
}

pub fn kmm_objective(w: &[f64], k: &[Vec<f64>], kappa: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            quad += w[i] * k[i][j] * w[j];
        }
    }
    0.5 * quad - w.iter().zip(kappa).map(|(a, b)| a * b).sum::<f64>()
}

/// Coarse-to-fine grid search over `[0, upper]^n ∩ {|Σw − n| ≤ band}`.
pub fn brute_force_kmm(src: &[f64], tgt: &[f64], bw: f64, upper: f64, band: f64) -> Vec<f64> {
    let n = src.len();
    let k = kernel_matrix(src, src, bw);
    let kst = kernel_matrix(src, tgt, bw);
    let kappa: Vec<f64> = kst
        .iter()
        .map(|row| row.iter().sum::<f64>() * n as f64 / tgt.len() as f64)
        .collect();
    let feasible = |w: &[f64]| (w.iter().sum::<f64>() - n as f64).abs() <= band + 1e-12;

    let mut lo = vec![0.0; n];
    let mut hi = vec![upper; n];
    let mut best = vec![0.0; n];
    let steps = 40;
    for _ in 0..8 {
        let mut best_val = f64::INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let w: Vec<f64> = (0..n)
                .map(|d| lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / steps as f64)
                .collect();
            if feasible(&w) {
                let v = kmm_objective(&w, &k, &kappa);
                if v < best_val {
                    best_val = v;
                    best = w;
                }
            }
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        for d in 0..n {
            let width = (hi[d] - lo[d]) / steps as f64 * 3.0;
            lo[d] = (best[d] - width).max(0.0);
            hi[d] = (best[d] + width).min(upper);
        }
    }
    best
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

pub fn covariate_shift_problem(var: f64) -> ShiftProblem {
    let src = [GaussianSpec::new(-1.0, 1.0).unwrap(), GaussianSpec::new(1.0, 1.0).unwrap()];
    let target = GaussianMixture::new(vec![
        (0.5, GaussianSpec::new(-1.0, var).unwrap()),
        (0.5, GaussianSpec::new(1.0, var).unwrap()),
    ])
    .unwrap();
    ShiftProblem::covariate_shift(src, [0.5, 0.5], target).unwrap()
}

