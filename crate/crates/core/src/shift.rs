//! One-dimensional Gaussian covariate-shift problems.
//!
//! A [`ShiftProblem`] fixes the source class-conditionals and priors and
//! one of two target designs:
//!
//! * [`TargetDesign::Marginal`]: a target marginal `p_Z`; target labels
//!   follow the source posterior, so `p(y|z) = p(y|x)` holds exactly and
//!   target class-conditionals come from inverting Bayes' rule.
//! * [`TargetDesign::ClassConditional`]: target class-conditionals are given
//!   directly and share the source priors. The artificial benchmark uses
//!   this with `N(∓1, σ²_Z)` classes.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::weights::WeightVector;

/// Class of a binary problem; `Negative` is label −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Negative,
    Positive,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Negative, Class::Positive];

    pub fn label(self) -> f64 {
        match self {
            Class::Negative => -1.0,
            Class::Positive => 1.0,
        }
    }

    fn index(self) -> usize {
        match self {
            Class::Negative => 0,
            Class::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSpec {
    mean: f64,
    variance: f64,
}

impl GaussianSpec {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::Argument(format!(
                "Gaussian needs finite mean and positive variance, got N({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (d * d / self.variance + (2.0 * PI * self.variance).ln())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.mean, self.std_dev())
            .expect("validated variance")
            .sample(rng)
    }
}

/// Finite mixture of Gaussians with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianMixture {
    components: Vec<(f64, GaussianSpec)>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, GaussianSpec)>) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if components.is_empty()
            || components.iter().any(|(w, _)| !(*w > 0.0))
            || (total - 1.0).abs() > 1e-12
        {
            return Err(Error::Argument(
                "mixture weights must be positive and sum to 1".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn single(g: GaussianSpec) -> Self {
        Self {
            components: vec![(1.0, g)],
        }
    }

    pub fn components(&self) -> &[(f64, GaussianSpec)] {
        &self.components
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, g)| w * g.pdf(x)).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|(w, g)| w * (g.mean * g.mean + g.variance))
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, g) in &self.components {
            acc += w;
            if u < acc {
                return g.sample(rng);
            }
        }
        self.components[self.components.len() - 1].1.sample(rng)
    }

    /// Integrate `f` against this mixture by composite Simpson over
    /// ±12 standard deviations of each component.
    fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.components
            .iter()
            .map(|(w, g)| {
                let s = g.std_dev();
                w * simpson(|x| f(x) * g.pdf(x), g.mean - 12.0 * s, g.mean + 12.0 * s, 4000)
            })
            .sum()
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TargetDesign {
    Marginal(GaussianMixture),
    ClassConditional([GaussianSpec; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftProblem {
    source: [GaussianSpec; 2],
    priors: [f64; 2],
    target: TargetDesign,
    /// Target class priors; equal to `priors` for class-conditional designs.
    target_priors: [f64; 2],
}

impl ShiftProblem {
    /// Posterior-preserving problem with the given target marginal.
    /// `source` and `priors` are indexed `[negative, positive]`.
    pub fn covariate_shift(
        source: [GaussianSpec; 2],
        priors: [f64; 2],
        target_marginal: GaussianMixture,
    ) -> Result<Self> {
        check_priors(priors)?;
        let mut problem = Self {
            source,
            priors,
            target: TargetDesign::Marginal(target_marginal),
            target_priors: priors,
        };
        let positive = match &problem.target {
            TargetDesign::Marginal(m) => m.expect(|z| problem.source_posterior(z)),
            TargetDesign::ClassConditional(_) => unreachable!(),
        };
        problem.target_priors = [1.0 - positive, positive];
        Ok(problem)
    }

    /// Problem whose target class-conditionals are given directly.
    pub fn class_conditional(
        source: [GaussianSpec; 2],
        priors: [f64; 2],
        target: [GaussianSpec; 2],
    ) -> Result<Self> {
        check_priors(priors)?;
        Ok(Self {
            source,
            priors,
            target: TargetDesign::ClassConditional(target),
            target_priors: priors,
        })
    }

    /// The artificial benchmark: source classes `N(∓1, 1)` with equal priors,
    /// target classes `N(∓1, target_variance)`.
    pub fn variance_shift(target_variance: f64) -> Result<Self> {
        let source = [GaussianSpec::new(-1.0, 1.0)?, GaussianSpec::new(1.0, 1.0)?];
        let target = [
            GaussianSpec::new(-1.0, target_variance)?,
            GaussianSpec::new(1.0, target_variance)?,
        ];
        Self::class_conditional(source, [0.5, 0.5], target)
    }

    pub fn source_conditionals(&self) -> &[GaussianSpec; 2] {
        &self.source
    }

    pub fn class_priors(&self) -> [f64; 2] {
        self.priors
    }

    pub fn target_design(&self) -> &TargetDesign {
        &self.target
    }

    pub fn source_prior(&self, class: Class) -> f64 {
        self.priors[class.index()]
    }

    pub fn target_prior(&self, class: Class) -> f64 {
        self.target_priors[class.index()]
    }

    pub fn source_marginal_density(&self, x: f64) -> f64 {
        Class::BOTH
            .iter()
            .map(|&c| self.source[c.index()].pdf(x) * self.priors[c.index()])
            .sum()
    }

    pub fn target_marginal_density(&self, z: f64) -> f64 {
        match &self.target {
            TargetDesign::Marginal(m) => m.pdf(z),
            TargetDesign::ClassConditional(t) => Class::BOTH
                .iter()
                .map(|&c| t[c.index()].pdf(z) * self.priors[c.index()])
                .sum(),
        }
    }

    /// `p(y = +1 | x)` in the source domain.
    pub fn source_posterior(&self, x: f64) -> f64 {
        // logistic of the log-odds avoids 0/0 far in the tails
        let log_pos = self.source[1].ln_pdf(x) + self.priors[1].ln();
        let log_neg = self.source[0].ln_pdf(x) + self.priors[0].ln();
        1.0 / (1.0 + (log_neg - log_pos).exp())
    }

    /// `p(y = +1 | z)` in the target domain.
    pub fn target_posterior(&self, z: f64) -> f64 {
        match &self.target {
            TargetDesign::Marginal(_) => self.source_posterior(z),
            TargetDesign::ClassConditional(t) => {
                let log_pos = t[1].ln_pdf(z) + self.priors[1].ln();
                let log_neg = t[0].ln_pdf(z) + self.priors[0].ln();
                1.0 / (1.0 + (log_neg - log_pos).exp())
            }
        }
    }

    /// `p(z | y)` in the target domain.
    pub fn target_conditional_density(&self, z: f64, class: Class) -> f64 {
        match &self.target {
            TargetDesign::Marginal(m) => {
                let post = self.source_posterior(z);
                let p_class = if class == Class::Positive { post } else { 1.0 - post };
                p_class * m.pdf(z) / self.target_priors[class.index()]
            }
            TargetDesign::ClassConditional(t) => t[class.index()].pdf(z),
        }
    }

    /// Draw `n` labeled source samples: class from the priors, then the
    /// feature from that class's Gaussian.
    pub fn sample_source<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<LabeledDataset> {
        if n == 0 {
            return Err(Error::Argument("sample size must be positive".into()));
        }
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let class = draw_class(self.priors, rng);
            xs.push(self.source[class.index()].sample(rng));
            ys.push(class.label());
        }
        LabeledDataset::from_columns(&xs, ys)
    }

    /// Draw exactly `per_class` source samples of each class, negatives first.
    pub fn sample_source_balanced<R: Rng + ?Sized>(
        &self,
        per_class: usize,
        rng: &mut R,
    ) -> Result<LabeledDataset> {
        if per_class == 0 {
            return Err(Error::Argument("sample size must be positive".into()));
        }
        let mut xs = Vec::with_capacity(2 * per_class);
        let mut ys = Vec::with_capacity(2 * per_class);
        for class in Class::BOTH {
            for _ in 0..per_class {
                xs.push(self.source[class.index()].sample(rng));
                ys.push(class.label());
            }
        }
        LabeledDataset::from_columns(&xs, ys)
    }

    /// Draw `m` labeled target samples. Marginal designs draw `z ~ p_Z` and
    /// then label +1 with probability `p(+1 | z)`; class-conditional designs
    /// draw the class first.
    pub fn sample_target<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<LabeledDataset> {
        if m == 0 {
            return Err(Error::Argument("sample size must be positive".into()));
        }
        let mut zs = Vec::with_capacity(m);
        let mut us = Vec::with_capacity(m);
        for _ in 0..m {
            match &self.target {
                TargetDesign::Marginal(marginal) => {
                    let z = marginal.sample(rng);
                    let u: f64 = rng.random();
                    zs.push(z);
                    us.push(if u < self.source_posterior(z) { 1.0 } else { -1.0 });
                }
                TargetDesign::ClassConditional(t) => {
                    let class = draw_class(self.priors, rng);
                    zs.push(t[class.index()].sample(rng));
                    us.push(class.label());
                }
            }
        }
        LabeledDataset::from_columns(&zs, us)
    }

    /// `p_Z(x) / p_X(x)` at each point.
    pub fn true_importance_weights(&self, points: &[f64]) -> Result<WeightVector> {
        WeightVector::new(
            points
                .iter()
                .map(|&x| self.target_marginal_density(x) / self.source_marginal_density(x))
                .collect(),
        )
    }

    /// Population moments `(E[x²], E[x·y])` of the source domain.
    pub fn source_moments(&self) -> (f64, f64) {
        let mut second = 0.0;
        let mut cross = 0.0;
        for c in Class::BOTH {
            let g = &self.source[c.index()];
            let p = self.priors[c.index()];
            second += p * (g.mean * g.mean + g.variance);
            cross += p * c.label() * g.mean;
        }
        (second, cross)
    }

    /// Population moments `(E[z²], E[z·u])` of the target domain.
    pub fn target_moments(&self) -> (f64, f64) {
        match &self.target {
            TargetDesign::Marginal(m) => {
                let cross = m.expect(|z| z * (2.0 * self.source_posterior(z) - 1.0));
                (m.second_moment(), cross)
            }
            TargetDesign::ClassConditional(t) => {
                let mut second = 0.0;
                let mut cross = 0.0;
                for c in Class::BOTH {
                    let g = &t[c.index()];
                    let p = self.priors[c.index()];
                    second += p * (g.mean * g.mean + g.variance);
                    cross += p * c.label() * g.mean;
                }
                (second, cross)
            }
        }
    }
}

fn check_priors(priors: [f64; 2]) -> Result<()> {
    if priors.iter().any(|&p| !(p > 0.0 && p < 1.0)) || (priors[0] + priors[1] - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!(
            "class priors must lie in (0,1) and sum to 1, got {priors:?}"
        )));
    }
    Ok(())
}

fn draw_class<R: Rng + ?Sized>(priors: [f64; 2], rng: &mut R) -> Class {
    let u: f64 = rng.random();
    if u < priors[1] {
        Class::Positive
    } else {
        Class::Negative
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use approx::assert_abs_diff_eq;

    fn unit_source() -> [GaussianSpec; 2] {
        [GaussianSpec::new(-1.0, 1.0).unwrap(), GaussianSpec::new(1.0, 1.0).unwrap()]
    }

    fn marginal_problem(variance: f64) -> ShiftProblem {
        ShiftProblem::covariate_shift(
            unit_source(),
            [0.5, 0.5],
            GaussianMixture::single(GaussianSpec::new(0.0, variance).unwrap()),
        )
        .unwrap()
    }

    fn identity_problem() -> ShiftProblem {
        let mix = GaussianMixture::new(vec![
            (0.5, GaussianSpec::new(-1.0, 1.0).unwrap()),
            (0.5, GaussianSpec::new(1.0, 1.0).unwrap()),
        ])
        .unwrap();
        ShiftProblem::covariate_shift(unit_source(), [0.5, 0.5], mix).unwrap()
    }

    #[test]
    fn gaussian_spec_validation() {
        assert!(GaussianSpec::new(0.0, 0.0).is_err());
        assert!(GaussianSpec::new(0.0, -1.0).is_err());
        assert!(GaussianSpec::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn bad_priors_rejected() {
        assert!(ShiftProblem::class_conditional(unit_source(), [0.0, 1.0], unit_source()).is_err());
        assert!(ShiftProblem::class_conditional(unit_source(), [0.3, 0.6], unit_source()).is_err());
    }

    #[test]
    fn posterior_values() {
        let p = marginal_problem(4.0);
        assert_abs_diff_eq!(p.source_posterior(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.source_posterior(1.0), 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(p.source_posterior(1.0), 0.880797, epsilon = 1e-6);
        assert!(p.source_posterior(50.0) > 1.0 - 1e-12);
        assert!(p.source_posterior(1e4) <= 1.0);
    }

    #[test]
    fn identity_shift_keeps_conditionals() {
        let p = identity_problem();
        for z in [-2.0, 0.0, 2.0] {
            for c in Class::BOTH {
                assert_abs_diff_eq!(
                    p.target_conditional_density(z, c),
                    p.source_conditionals()[c.index()].pdf(z),
                    epsilon = 1e-12
                );
            }
        }
        let w = p.true_importance_weights(&[-3.0, -0.5, 0.0, 1.7]).unwrap();
        for v in w.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn total_probability() {
        let p = marginal_problem(4.0);
        let z = 0.7;
        let total: f64 = Class::BOTH
            .iter()
            .map(|&c| p.target_conditional_density(z, c) * p.target_prior(c))
            .sum();
        assert_abs_diff_eq!(total, p.target_marginal_density(z), epsilon = 1e-12);
    }

    #[test]
    fn true_weight_at_origin() {
        let p = marginal_problem(4.0);
        let w = p.true_importance_weights(&[0.0]).unwrap();
        assert_abs_diff_eq!(w.values()[0], 0.5f64.exp() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.values()[0], 0.8244, epsilon = 1e-4);
    }

    #[test]
    fn class_conditional_marginal_weights() {
        let p = ShiftProblem::variance_shift(1.0).unwrap();
        let w = p.true_importance_weights(&[-2.0, 0.3, 4.0]).unwrap();
        assert!(w.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let (second, cross) = ShiftProblem::variance_shift(4.0).unwrap().target_moments();
        assert_abs_diff_eq!(second, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cross, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_seeded() {
        let p = ShiftProblem::variance_shift(2.0).unwrap();
        let a = p.sample_source(20, &mut rng_for(3, &[])).unwrap();
        let b = p.sample_source(20, &mut rng_for(3, &[])).unwrap();
        assert_eq!(a, b);
        let c = p.sample_target(20, &mut rng_for(3, &[])).unwrap();
        let d = p.sample_target(20, &mut rng_for(3, &[])).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn balanced_sampling_counts() {
        let p = ShiftProblem::variance_shift(2.0).unwrap();
        let ds = p.sample_source_balanced(7, &mut rng_for(1, &[])).unwrap();
        assert_eq!(ds.len(), 14);
        assert_eq!(ds.labels().iter().filter(|&&y| y > 0.0).count(), 7);
    }

    #[test]
    fn zero_size_rejected() {
        let p = ShiftProblem::variance_shift(2.0).unwrap();
        assert!(p.sample_source(0, &mut rng_for(1, &[])).is_err());
        assert!(p.sample_target(0, &mut rng_for(1, &[])).is_err());
    }
}
