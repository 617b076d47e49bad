//! Plain `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Lists are comma
//! separated. Unknown keys are configuration errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ridge::RiskMode;
use crate::select::LambdaGrid;
use crate::shift::{GaussianMixture, GaussianSpec, ShiftProblem};
use crate::weights::{Estimator, EstimatorSettings, WidthCandidates};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl TableFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Markdown => "markdown",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Markdown => "md",
        }
    }
}

/// How artificial target samples are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// Target classes `N(μ_y, σ²_Z)` sharing the source priors.
    ClassConditional,
    /// Target marginal `Σ_y p(y) N(μ_y, σ²_Z)`, labels from the source
    /// posterior.
    CovariateShift,
}

impl TargetMode {
    fn name(self) -> &'static str {
        match self {
            TargetMode::ClassConditional => "class-conditional",
            TargetMode::CovariateShift => "covariate-shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub repeats: usize,
    pub source_size: usize,
    pub target_size: usize,
    /// Draw exactly this many source samples per class instead of
    /// `source_size` samples with random labels.
    pub samples_per_class: Option<usize>,
    pub class_means: [f64; 2],
    pub source_variance: f64,
    pub priors: [f64; 2],
    pub target_variances: Vec<f64>,
    pub target_mode: TargetMode,
    pub curve_variances: Vec<f64>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    pub fold_count: usize,
    pub estimators: Vec<Estimator>,
    pub estimator_settings: EstimatorSettings,
    pub risk_mode: RiskMode,
    pub missing_threshold: f64,
    pub intercept: bool,
    /// Report standard deviations instead of standard errors in tables.
    pub report_std: bool,
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub formats: Vec<TableFormat>,
    pub jobs: usize,
    /// Largest tolerated fraction of failed estimator runs.
    pub failure_budget: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            repeats: 100,
            source_size: 100,
            target_size: 100,
            samples_per_class: None,
            class_means: [-1.0, 1.0],
            source_variance: 1.0,
            priors: [0.5, 0.5],
            target_variances: vec![0.1, 0.5, 1.0, 2.0, 3.0, 4.0],
            target_mode: TargetMode::ClassConditional,
            curve_variances: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            grid_min: -100.0,
            grid_max: 500.0,
            grid_step: 1.0,
            fold_count: 5,
            estimators: Estimator::ALL.to_vec(),
            estimator_settings: EstimatorSettings::default(),
            risk_mode: RiskMode::AsPrinted,
            missing_threshold: 0.99,
            intercept: false,
            report_std: false,
            data_dir: None,
            out_dir: PathBuf::from("results"),
            formats: vec![TableFormat::Csv, TableFormat::Markdown],
            jobs: 0,
            failure_budget: 0.2,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for the heart-disease benchmark (10 repetitions).
    pub fn heart_default() -> Self {
        Self {
            repeats: 10,
            ..Self::default()
        }
    }

    pub fn from_file(path: impl AsRef<Path>, base: Self) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, mut base: Self) -> Result<Self> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            base.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        base.validate()?;
        Ok(base)
    }

    /// Set one key; values use the same syntax as the config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let kliep = &mut self.estimator_settings.kliep;
        let kmm = &mut self.estimator_settings.kmm;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "repeats" => self.repeats = parse(key, value)?,
            "source_size" | "n" => self.source_size = parse(key, value)?,
            "target_size" | "m" => self.target_size = parse(key, value)?,
            "samples_per_class" => {
                self.samples_per_class = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "class_means" => self.class_means = pair(key, value)?,
            "source_variance" => self.source_variance = parse(key, value)?,
            "priors" => self.priors = pair(key, value)?,
            "target_variances" => self.target_variances = list(key, value)?,
            "target_mode" => {
                self.target_mode = match value {
                    "class-conditional" => TargetMode::ClassConditional,
                    "covariate-shift" => TargetMode::CovariateShift,
                    _ => return Err(bad(key, value)),
                }
            }
            "curve_variances" => self.curve_variances = list(key, value)?,
            "grid_min" => self.grid_min = parse(key, value)?,
            "grid_max" => self.grid_max = parse(key, value)?,
            "grid_step" => self.grid_step = parse(key, value)?,
            "fold_count" => self.fold_count = parse(key, value)?,
            "estimators" => self.estimators = parse_estimators(value)?,
            "risk_mode" => self.risk_mode = RiskMode::parse(value).ok_or_else(|| bad(key, value))?,
            "missing_threshold" => self.missing_threshold = parse(key, value)?,
            "intercept" => self.intercept = parse(key, value)?,
            "report_std" => self.report_std = parse(key, value)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "formats" => {
                self.formats = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(TableFormat::parse)
                    .collect::<Result<_>>()?
            }
            "jobs" => self.jobs = parse(key, value)?,
            "failure_budget" => self.failure_budget = parse(key, value)?,
            "kmm_upper_bound" => kmm.upper_bound = parse(key, value)?,
            "kmm_sum_slack" => {
                kmm.sum_slack = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "kmm_bandwidth" => {
                kmm.bandwidth = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "kmm_tolerance" => kmm.solver_tolerance = parse(key, value)?,
            "kmm_max_iterations" => kmm.max_iterations = parse(key, value)?,
            "kliep_width_factors" => kliep.width_candidates = WidthCandidates::Relative(list(key, value)?),
            "kliep_widths" => kliep.width_candidates = WidthCandidates::Absolute(list(key, value)?),
            "kliep_folds" => kliep.cv_folds = parse(key, value)?,
            "kliep_max_iterations" => kliep.max_iterations = parse(key, value)?,
            "kliep_tolerance" => kliep.tolerance = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.source_size == 0 || self.target_size == 0 {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        if self.fold_count < 2 {
            return Err(Error::Config("fold_count must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.missing_threshold) {
            return Err(Error::Config("missing_threshold must lie in [0, 1]".into()));
        }
        if !(self.failure_budget >= 0.0) {
            return Err(Error::Config("failure_budget must be nonnegative".into()));
        }
        if self.target_variances.iter().chain(&self.curve_variances).any(|v| !(*v > 0.0)) {
            return Err(Error::Config("target variances must be positive".into()));
        }
        self.grid()?;
        self.problem(1.0)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<LambdaGrid> {
        LambdaGrid::linear(self.grid_min, self.grid_max, self.grid_step)
            .map_err(|e| Error::Config(format!("lambda grid: {e}")))
    }

    /// The artificial shift problem for one target variance.
    pub fn problem(&self, target_variance: f64) -> Result<ShiftProblem> {
        let [m0, m1] = self.class_means;
        let source = [
            GaussianSpec::new(m0, self.source_variance)?,
            GaussianSpec::new(m1, self.source_variance)?,
        ];
        let target = [
            GaussianSpec::new(m0, target_variance)?,
            GaussianSpec::new(m1, target_variance)?,
        ];
        let problem = match self.target_mode {
            TargetMode::ClassConditional => ShiftProblem::class_conditional(source, self.priors, target),
            TargetMode::CovariateShift => {
                let marginal = GaussianMixture::new(vec![(self.priors[0], target[0]), (self.priors[1], target[1])])?;
                ShiftProblem::covariate_shift(source, self.priors, marginal)
            }
        };
        problem.map_err(|e| Error::Config(e.to_string()))
    }

    /// Every setting that affects results, as sorted key/value pairs.
    /// Output location and thread count are excluded.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        let kliep = &self.estimator_settings.kliep;
        let kmm = &self.estimator_settings.kmm;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut map = BTreeMap::new();
        map.insert("seed", self.seed.to_string());
        map.insert("repeats", self.repeats.to_string());
        map.insert("source_size", self.source_size.to_string());
        map.insert("target_size", self.target_size.to_string());
        map.insert(
            "samples_per_class",
            self.samples_per_class.map_or("none".into(), |v| v.to_string()),
        );
        map.insert("class_means", join(&self.class_means));
        map.insert("source_variance", self.source_variance.to_string());
        map.insert("priors", join(&self.priors));
        map.insert("target_variances", join(&self.target_variances));
        map.insert("target_mode", self.target_mode.name().into());
        map.insert("curve_variances", join(&self.curve_variances));
        map.insert("grid_min", self.grid_min.to_string());
        map.insert("grid_max", self.grid_max.to_string());
        map.insert("grid_step", self.grid_step.to_string());
        map.insert("fold_count", self.fold_count.to_string());
        map.insert(
            "estimators",
            self.estimators.iter().map(|e| e.name()).collect::<Vec<_>>().join(","),
        );
        map.insert("risk_mode", self.risk_mode.name().into());
        map.insert("missing_threshold", self.missing_threshold.to_string());
        map.insert("intercept", self.intercept.to_string());
        map.insert("report_std", self.report_std.to_string());
        map.insert("failure_budget", self.failure_budget.to_string());
        map.insert("kmm_upper_bound", kmm.upper_bound.to_string());
        map.insert("kmm_sum_slack", kmm.sum_slack.map_or("auto".into(), |v| v.to_string()));
        map.insert("kmm_bandwidth", kmm.bandwidth.map_or("auto".into(), |v| v.to_string()));
        map.insert("kmm_tolerance", kmm.solver_tolerance.to_string());
        map.insert("kmm_max_iterations", kmm.max_iterations.to_string());
        match &kliep.width_candidates {
            WidthCandidates::Relative(f) => map.insert("kliep_width_factors", join(f)),
            WidthCandidates::Absolute(w) => map.insert("kliep_widths", join(w)),
        };
        map.insert("kliep_folds", kliep.cv_folds.to_string());
        map.insert("kliep_max_iterations", kliep.max_iterations.to_string());
        map.insert("kliep_tolerance", kliep.tolerance.to_string());
        map
    }

    /// First 16 hex digits of the SHA-256 of the canonical settings.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.canonical() {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value '{value}' for '{key}'"))
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn pair(key: &str, value: &str) -> Result<[f64; 2]> {
    let v = list(key, value)?;
    <[f64; 2]>::try_from(v).map_err(|_| bad(key, value))
}

pub fn parse_estimators(value: &str) -> Result<Vec<Estimator>> {
    let mut out: Vec<Estimator> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let text = "# comment\nseed = 42\nrepeats=3\ntarget_variances = 1, 2\nestimators = nn,rg\nformats = md\nkmm_upper_bound = 50\n";
        let cfg = ExperimentConfig::parse(text, ExperimentConfig::default()).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.repeats, 3);
        assert_eq!(cfg.target_variances, vec![1.0, 2.0]);
        assert_eq!(cfg.estimators, vec![Estimator::RatioOfGaussians, Estimator::NearestNeighbor]);
        assert_eq!(cfg.formats, vec![TableFormat::Markdown]);
        assert_eq!(cfg.estimator_settings.kmm.upper_bound, 50.0);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        let base = ExperimentConfig::default;
        assert!(matches!(ExperimentConfig::parse("bogus = 1", base()), Err(Error::Config(_))));
        assert!(ExperimentConfig::parse("seed = x", base()).is_err());
        assert!(ExperimentConfig::parse("estimators = ulsif", base()).is_err());
        assert!(ExperimentConfig::parse("repeats = 0", base()).is_err());
        assert!(ExperimentConfig::parse("grid_step = 0", base()).is_err());
        assert!(ExperimentConfig::parse("no equals sign", base()).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("/elsewhere");
        b.jobs = 7;
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 2;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
