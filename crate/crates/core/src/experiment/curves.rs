use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::select::LambdaGrid;
use crate::shift::ShiftProblem;

/// Expected target MSE of the population ridge fit, per λ and per setting.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurves {
    pub grid: Vec<f64>,
    pub labels: Vec<String>,
    /// `curves[setting][λ index]`
    pub curves: Vec<Vec<f64>>,
    pub argmins: Vec<f64>,
}

/// For each problem, the target MSE `1 − 2h·E[zu] + h²·E[z²]` of the
/// one-dimensional ridge solution `h(λ) = n·E[xy] / (n·E[x²] + λ)` that a
/// source sample of size `n` yields in expectation.
pub fn expected_target_mse_curves(
    problems: &[(String, ShiftProblem)],
    grid: &LambdaGrid,
    n: usize,
) -> MseCurves {
    let n = n as f64;
    let mut curves = Vec::with_capacity(problems.len());
    let mut argmins = Vec::with_capacity(problems.len());
    for (_, problem) in problems {
        let (sxx, sxy) = problem.source_moments();
        let (tzz, tzu) = problem.target_moments();
        let curve: Vec<f64> = grid
            .values()
            .iter()
            .map(|&lambda| {
                let denom = n * sxx + lambda;
                if denom.abs() < f64::EPSILON * n * sxx.abs().max(1.0) {
                    return f64::INFINITY;
                }
                let h = n * sxy / denom;
                1.0 - 2.0 * h * tzu + h * h * tzz
            })
            .collect();
        let best = curve
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((i, v)),
            })
            .map_or(f64::NAN, |(i, _)| grid.values()[i]);
        curves.push(curve);
        argmins.push(best);
    }
    MseCurves {
        grid: grid.values().to_vec(),
        labels: problems.iter().map(|(l, _)| l.clone()).collect(),
        curves,
        argmins,
    }
}

impl MseCurves {
    /// Tab-delimited: a header, one row per λ, then an `argmin` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lambda");
        for l in &self.labels {
            let _ = write!(out, "\tsigma2_Z={l}");
        }
        out.push('\n');
        for (i, lambda) in self.grid.iter().enumerate() {
            let _ = write!(out, "{lambda}");
            for c in &self.curves {
                let _ = write!(out, "\t{:.9}", c[i]);
            }
            out.push('\n');
        }
        out.push_str("argmin");
        for a in &self.argmins {
            let _ = write!(out, "\t{a}");
        }
        out.push('\n');
        out
    }
}

/// Write the curves as a tab-delimited file.
pub fn emit_mse_curves(curves: &MseCurves, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, curves.to_tsv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves(variances: &[f64]) -> MseCurves {
        let problems: Vec<_> = variances
            .iter()
            .map(|&v| (format!("{v}"), ShiftProblem::variance_shift(v).unwrap()))
            .collect();
        let grid = LambdaGrid::linear(-100.0, 500.0, 1.0).unwrap();
        expected_target_mse_curves(&problems, &grid, 100)
    }

    #[test]
    fn file_shape() {
        let c = curves(&[1.0, 2.0]);
        let tsv = c.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 1 + 601 + 1);
        assert!(lines.iter().all(|l| l.split('\t').count() == 3));
        assert!(lines.last().unwrap().starts_with("argmin\t"));
    }

    #[test]
    fn no_shift_minimum_is_unregularized() {
        let c = curves(&[1.0]);
        assert_eq!(c.argmins[0], 0.0);
    }
}
