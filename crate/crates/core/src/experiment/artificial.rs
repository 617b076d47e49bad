use super::{
    aggregate, count_failures, grid_label, ExperimentConfig, ExperimentRun, Method, RepeatContext,
    RepeatRecord, TableMetadata,
};
use crate::error::Result;
use crate::par::map_indexed;
use crate::rng::rng_for;
use crate::shift::ShiftProblem;

const STREAM: u64 = 0;

fn variance_label(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Repeat the artificial variance-shift study for every target variance
/// and aggregate λ̂ per method. Rows follow the order λ̂_V, the weighted
/// estimators, the true ratio, λ̂_Z.
pub fn run_artificial(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let problems: Vec<ShiftProblem> = cfg
        .target_variances
        .iter()
        .map(|&v| cfg.problem(v))
        .collect::<Result<_>>()?;
    let ctx = RepeatContext {
        grid: &grid,
        fold_count: cfg.fold_count,
        estimators: &cfg.estimators,
        settings: &cfg.estimator_settings,
        risk_mode: cfg.risk_mode,
    };
    let settings: Vec<String> = cfg.target_variances.iter().map(|&v| variance_label(v)).collect();

    let jobs = problems.len() * cfg.repeats;
    let records = map_indexed(jobs, cfg.jobs, |job| {
        let v = job / cfg.repeats;
        let r = job % cfg.repeats;
        let path = [STREAM, v as u64, r as u64];
        let mut rng = rng_for(cfg.seed, &path);
        let outcomes = run_one(cfg, &ctx, &problems[v], &mut rng, &path);
        RepeatRecord {
            setting: settings[v].clone(),
            repeat: r,
            outcomes,
        }
    });

    let mut methods = vec![Method::SourceCv];
    methods.extend(cfg.estimators.iter().map(|&e| Method::Weighted(e)));
    methods.push(Method::TrueRatio);
    methods.push(Method::Target);

    let metadata = TableMetadata {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        grid: grid_label(cfg),
        spread: if cfg.report_std { "std" } else { "stderr" }.into(),
        notes: vec![format!(
            "{} repeats; n={}, m={}; {}-fold CV",
            cfg.repeats, cfg.source_size, cfg.target_size, cfg.fold_count
        )],
    };
    let table = aggregate("artificial", "sigma2_Z", &settings, &methods, &records, true, metadata);
    let (attempts, failures) = count_failures(&records);
    Ok(ExperimentRun {
        name: "artificial".into(),
        table,
        records,
        attempts,
        failures,
        preprocessing: Vec::new(),
    })
}

fn run_one(
    cfg: &ExperimentConfig,
    ctx: &RepeatContext<'_>,
    problem: &ShiftProblem,
    rng: &mut crate::rng::Rng,
    path: &[u64],
) -> Vec<(Method, std::result::Result<super::Selected, String>)> {
    let sampled = (|| {
        let source = match cfg.samples_per_class {
            Some(k) => problem.sample_source_balanced(k, rng)?,
            None => problem.sample_source(cfg.source_size, rng)?,
        };
        let target = problem.sample_target(cfg.target_size, rng)?;
        Ok::<_, crate::Error>((source, target))
    })();
    let (source, target) = match sampled {
        Ok(pair) => pair,
        Err(e) => {
            let msg = e.to_string();
            let mut out = vec![(Method::SourceCv, Err(msg.clone()))];
            out.extend(cfg.estimators.iter().map(|&est| (Method::Weighted(est), Err(msg.clone()))));
            out.push((Method::TrueRatio, Err(msg.clone())));
            out.push((Method::Target, Err(msg)));
            return out;
        }
    };

    let points: Vec<f64> = source.features().column(0).iter().copied().collect();
    let true_weights = problem.true_importance_weights(&points);
    let (fit_source, fit_target) = if cfg.intercept {
        (source.with_bias_column(), target.with_bias_column())
    } else {
        (source.clone(), target.clone())
    };
    ctx.run(
        &fit_source,
        &fit_target,
        source.features(),
        target.features(),
        vec![(Method::TrueRatio, true_weights)],
        rng,
        (cfg.seed, path),
    )
}
