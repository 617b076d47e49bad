//! Regularization parameter selection under covariate shift.
//!
//! The crate generates Gaussian covariate-shift problems, estimates
//! importance weights (ratio of Gaussians, KLIEP, KMM, nearest-neighbour),
//! fits ridge classifiers in closed form and selects λ by plain,
//! importance-weighted or oracle validation. The [`experiment`] module
//! drives the artificial and heart-disease benchmarks end to end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod par;
pub mod ridge;
pub mod rng;
pub mod select;
pub mod shift;
pub mod weights;

pub use data::{LabeledDataset, SplitPlan};
pub use error::{Error, Result};
pub use ridge::{LinearClassifier, RiskMode};
pub use select::{LambdaGrid, SelectionResult};
pub use shift::{GaussianSpec, ShiftProblem};
pub use weights::{Estimator, WeightVector};
