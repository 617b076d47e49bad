use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covshift::experiment::{
    emit_mse_curves, expected_target_mse_curves, run_artificial, run_heart, write_outputs,
    ExperimentConfig, ExperimentRun,
};
use covshift::{Error, Result};

/// Regularization selection under covariate shift.
#[derive(Parser)]
#[command(name = "covshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Variance-shift study on synthetic Gaussian classes.
    Artificial(Common),
    /// Hospital transfer study on the UCI heart-disease data.
    Heart {
        #[command(flatten)]
        common: Common,
        /// Directory holding the processed.*.data files.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Expected target MSE as a function of λ, per target variance.
    Curves(Common),
}

#[derive(Args)]
struct Common {
    /// Plain `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated table formats: csv, markdown.
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated estimators: rg, kliep, kmm, nn.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn config(&self, base: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path, base)?,
            None => base,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if let Some(f) = &self.format {
            cfg.set("formats", f)?;
        }
        if let Some(e) = &self.estimators {
            cfg.set("estimators", e)?;
        }
        if let Some(r) = self.repeats {
            cfg.repeats = r;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn finish(run: &ExperimentRun, cfg: &ExperimentConfig) -> Result<()> {
    for path in write_outputs(run, cfg)? {
        println!("{}", path.display());
    }
    if run.failures > 0 {
        eprintln!(
            "{} of {} method runs failed ({:.1}%)",
            run.failures,
            run.attempts,
            100.0 * run.failure_fraction()
        );
    }
    run.check_failure_budget(cfg.failure_budget)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Artificial(common) => {
            let cfg = common.config(ExperimentConfig::default())?;
            let run = run_artificial(&cfg)?;
            finish(&run, &cfg)
        }
        Command::Heart { common, data_dir } => {
            let cfg = common.config(ExperimentConfig::heart_default())?;
            let dir = data_dir
                .or_else(|| cfg.data_dir.clone())
                .unwrap_or_else(|| PathBuf::from("data/heart"));
            let run = run_heart(&cfg, &dir)?;
            finish(&run, &cfg)
        }
        Command::Curves(common) => {
            let cfg = common.config(ExperimentConfig::default())?;
            let problems = cfg
                .curve_variances
                .iter()
                .map(|&v| Ok((format!("{v}"), cfg.problem(v)?)))
                .collect::<Result<Vec<_>>>()?;
            let curves = expected_target_mse_curves(&problems, &cfg.grid()?, cfg.source_size);
            std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
            let path = cfg.out_dir.join("curves.tsv");
            emit_mse_curves(&curves, &path)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
