//! Convex QP over a box intersected with a band on the coordinate sum:
//!
//! ```text
//! minimize   ½ wᵀHw − fᵀw
//! subject to 0 ≤ wᵢ ≤ B,  |Σ wᵢ − s| ≤ δ
//! ```
//!
//! Solved by accelerated projected gradient with step `1/L`, `L` the top
//! eigenvalue of `H` from power iteration, and adaptive momentum restart.
//! The projection onto the feasible set is exact: the Euclidean projection
//! of `v` is `clip(v − τ, 0, B)` for a scalar shift `τ` found by bisection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSumQp {
    pub upper: f64,
    pub sum_target: f64,
    pub sum_slack: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Final gradient-mapping norm, `L · ‖y − P(y − ∇f(y)/L)‖∞`.
    pub residual: f64,
}

impl BoxSumQp {
    fn sum_band(&self) -> (f64, f64) {
        (self.sum_target - self.sum_slack, self.sum_target + self.sum_slack)
    }

    fn check(&self, n: usize) -> Result<()> {
        if !(self.upper > 0.0) {
            return Err(Error::Argument(format!("upper bound {} must be positive", self.upper)));
        }
        if !(self.sum_slack >= 0.0) {
            return Err(Error::Argument(format!("sum slack {} must be nonnegative", self.sum_slack)));
        }
        let (lo, hi) = self.sum_band();
        if hi < 0.0 || lo > n as f64 * self.upper {
            return Err(Error::Infeasible(format!(
                "sum band [{lo}, {hi}] unreachable with {n} weights in [0, {}]",
                self.upper
            )));
        }
        Ok(())
    }

    /// Euclidean projection onto `[0, B]ⁿ ∩ {lo ≤ Σw ≤ hi}`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let (lo, hi) = self.sum_band();
        let b = self.upper;
        let clipped_sum = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, b)).sum::<f64>();
        let s0 = clipped_sum(0.0);
        let tau = if s0 > hi {
            shift_for_sum(clipped_sum, hi, v, b, true)
        } else if s0 < lo {
            shift_for_sum(clipped_sum, lo, v, b, false)
        } else {
            0.0
        };
        v.map(|x| (x - tau).clamp(0.0, b))
    }

    pub fn solve(&self, h: &DMatrix<f64>, f: &DVector<f64>) -> Result<QpSolution> {
        let n = f.len();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::Argument("QP dimensions disagree".into()));
        }
        self.check(n)?;
        if n == 0 {
            return Ok(QpSolution {
                x: DVector::zeros(0),
                iterations: 0,
                residual: 0.0,
            });
        }

        let lipschitz = 1.05 * largest_eigenvalue(h) + f64::EPSILON;
        let tol = self.tolerance * f.amax().max(1.0);

        let start = DVector::from_element(n, (self.sum_target / n as f64).clamp(0.0, self.upper));
        let mut x = self.project(&start);
        let mut y = x.clone();
        let mut momentum = 1.0f64;
        let mut residual = f64::INFINITY;

        for iter in 1..=self.max_iterations {
            let grad = h * &y - f;
            let x_next = self.project(&(&y - &grad / lipschitz));
            residual = lipschitz * (&y - &x_next).amax();
            if residual <= tol {
                return Ok(QpSolution {
                    x: x_next,
                    iterations: iter,
                    residual,
                });
            }
            // restart when the momentum direction opposes the gradient step
            let restart = (&y - &x_next).dot(&(&x_next - &x)) > 0.0;
            let next_momentum = if restart {
                1.0
            } else {
                0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt())
            };
            y = if restart {
                x_next.clone()
            } else {
                &x_next + (&x_next - &x) * ((momentum - 1.0) / next_momentum)
            };
            momentum = next_momentum;
            x = x_next;
        }
        Err(Error::Estimation {
            message: format!("QP solver did not converge in {} iterations", self.max_iterations),
            residual,
        })
    }
}

/// Bisection for the shift τ at which the clipped sum reaches `goal`. The
/// returned τ always lies on the feasible side of the band edge.
fn shift_for_sum(
    clipped_sum: impl Fn(f64) -> f64,
    goal: f64,
    v: &DVector<f64>,
    upper: f64,
    above: bool,
) -> f64 {
    // clipped_sum is nonincreasing in τ; it is n·B below min(v) − B and 0 above max(v)
    let mut lo = v.min() - upper - 1.0;
    let mut hi = v.max() + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clipped_sum(mid) > goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // clipped_sum(lo) ≥ goal ≥ clipped_sum(hi)
    if above {
        hi
    } else {
        lo
    }
}

fn largest_eigenvalue(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..500 {
        let hv = h * &v;
        let norm = hv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&hv);
        v = hv / norm;
        if (next - estimate).abs() <= 1e-10 * next.abs() {
            return next.max(norm);
        }
        estimate = next;
    }
    estimate
}

/// Minimize `½ wᵀHw − fᵀw` over `0 ≤ w ≤ upper`, `|Σw − sum_target| ≤ slack`.
pub fn solve_box_sum_qp(
    h: &DMatrix<f64>,
    f: &DVector<f64>,
    upper: f64,
    sum_target: f64,
    slack: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<QpSolution> {
    BoxSumQp {
        upper,
        sum_target,
        sum_slack: slack,
        tolerance,
        max_iterations,
    }
    .solve(h, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interior_optimum_is_returned() {
        let n = 4;
        let sol = solve_box_sum_qp(
            &DMatrix::identity(n, n),
            &DVector::from_element(n, 1.0),
            10.0,
            n as f64,
            2.0,
            1e-10,
            10_000,
        )
        .unwrap();
        for v in sol.x.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn clipped_at_box() {
        let sol = solve_box_sum_qp(
            &DMatrix::identity(1, 1),
            &DVector::from_element(1, 5.0),
            2.0,
            1.0,
            10.0,
            1e-10,
            1000,
        )
        .unwrap();
        assert_eq!(sol.x[0], 2.0);
    }

    #[test]
    fn active_sum_constraint() {
        // unconstrained optimum (3, 3) exceeds the band [0, 4] → (2, 2)
        let sol = solve_box_sum_qp(
            &DMatrix::identity(2, 2),
            &DVector::from_element(2, 3.0),
            10.0,
            2.0,
            2.0,
            1e-10,
            10_000,
        )
        .unwrap();
        assert_abs_diff_eq!(sol.x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], 2.0, epsilon = 1e-9);
        assert!(sol.x.sum() <= 4.0);
    }

    #[test]
    fn unreachable_band_is_infeasible() {
        let res = solve_box_sum_qp(
            &DMatrix::identity(3, 3),
            &DVector::zeros(3),
            0.5,
            3.0,
            0.1,
            1e-8,
            100,
        );
        assert!(matches!(res, Err(Error::Infeasible(_))));
    }

    #[test]
    fn projection_is_feasible() {
        let qp = BoxSumQp {
            upper: 1.5,
            sum_target: 3.0,
            sum_slack: 0.25,
            tolerance: 1e-8,
            max_iterations: 10,
        };
        for v in [
            DVector::from_vec(vec![5.0, -2.0, 0.3, 7.0]),
            DVector::from_vec(vec![-5.0, -2.0, 0.3, -7.0]),
            DVector::from_vec(vec![0.7, 0.8, 0.9, 0.5]),
        ] {
            let p = qp.project(&v);
            assert!(p.iter().all(|&x| (0.0..=1.5).contains(&x)));
            assert!((p.sum() - 3.0).abs() <= 0.25, "{}", p.sum());
        }
    }

    #[test]
    fn power_iteration_top_eigenvalue() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_abs_diff_eq!(largest_eigenvalue(&h), 3.0, epsilon = 1e-6);
    }
}
