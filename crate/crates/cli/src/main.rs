//! Command-line driver for the recursive-versus-direct forecasting studies.

mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use recdir_core::polypred::{compose, PolyPredictor};
use recdir_core::{mcharness, mlpx, taskspace, Error};
use serde::Serialize;

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "recdir", version, about = "Recursive vs direct multi-step forecasting experiments")]
struct Cli {
    /// Worker threads; 0 uses one per core. Never changes output bytes.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the h-fold composition of a polynomial predictor.
    Compose {
        /// Predictor as JSON, e.g. {"p":2,"terms":[{"exps":{"0":1},"coef":1.0}]}.
        #[arg(long, conflicts_with = "predictor_file", required_unless_present = "predictor_file")]
        predictor: Option<String>,
        /// File holding the predictor JSON.
        #[arg(long)]
        predictor_file: Option<PathBuf>,
        #[arg(long, short = 'H', default_value_t = 2)]
        horizon: usize,
        /// Parameter point for the Jacobian, comma separated; defaults to
        /// the predictor's own coefficients.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
    },
    /// Monte Carlo sweep comparing theoretical and empirical estimation variance.
    Sweep(RunArgs),
    /// Task-space distances and fits for bilinear two-step predictors.
    Taskspace(RunArgs),
    /// Recursive vs direct MLP study on a CSV series.
    Ettm1 {
        #[command(flatten)]
        run: RunArgs,
        /// CSV file with a header row.
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML config, or JSON when the name ends in .json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            msg: msg.into(),
        }
    }

    fn data(e: impl ToString) -> Self {
        Self {
            code: EXIT_DATA,
            msg: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invalid(_) | Error::Shape { .. } | Error::UnsupportedHorizon(_) => EXIT_CONFIG,
            Error::Data(_) | Error::TooFewSamples { .. } => EXIT_DATA,
            Error::SingularFit { .. } | Error::Singular(_) | Error::Degenerate(_) | Error::Diverged { .. } => {
                EXIT_NUMERIC
            }
            Error::Io(_) => EXIT_IO,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            msg: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(EXIT_IO);
    }
    let res = match cli.command {
        Command::Compose {
            predictor,
            predictor_file,
            horizon,
            at,
        } => cmd_compose(predictor, predictor_file, horizon, at),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Taskspace(args) => cmd_taskspace(&args),
        Command::Ettm1 { run, data } => cmd_ettm1(&run, &data),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct MapEntry {
    monomial: String,
    alpha: String,
}

#[derive(Serialize)]
struct ComposeReport {
    horizon: usize,
    one_step: String,
    composed: String,
    composed_predictor: PolyPredictor,
    param_map: Vec<MapEntry>,
    at: Vec<f64>,
    monomials: Vec<String>,
    alpha: Vec<f64>,
    jacobian: Vec<Vec<f64>>,
}

fn cmd_compose(predictor: Option<String>, file: Option<PathBuf>, horizon: usize, at: Option<Vec<f64>>) -> Outcome {
    let text = match (predictor, file) {
        (Some(t), _) => t,
        (None, Some(path)) => std::fs::read_to_string(&path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?,
        (None, None) => return Err(Failure::config("a predictor is required")),
    };
    let pred: PolyPredictor =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("predictor JSON: {e}")))?;
    if horizon == 0 {
        return Err(Failure::config("horizon must be >= 1"));
    }
    let result = compose(&pred, horizon)?;
    let b = at.unwrap_or_else(|| result.one_step_params().to_vec());
    let map = &result.map;
    let alpha = map.alpha_at(&b)?;
    let j = map.jacobian_at(&b)?;
    let report = ComposeReport {
        horizon,
        one_step: pred.to_string(),
        composed: result.composed.to_string(),
        composed_predictor: result.composed.clone(),
        param_map: map
            .entries()
            .iter()
            .map(|(m, poly)| MapEntry {
                monomial: m.to_string(),
                alpha: poly.to_string(),
            })
            .collect(),
        monomials: map.composed_monomials().iter().map(|m| m.to_string()).collect(),
        at: b,
        alpha,
        jacobian: (0..j.nrows()).map(|r| j.row(r).iter().copied().collect()).collect(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn load_config(args: &RunArgs) -> Result<config::FileConfig, Failure> {
    config::load(args.config.as_deref()).map_err(Failure::config)
}

fn finish<C: Serialize>(mut m: RunManifest<C>, dir: &Path, paths: &[PathBuf], failures: usize, start: Instant) -> Outcome {
    m.set_outputs(dir, paths);
    m.failures = failures;
    m.duration_secs = start.elapsed().as_secs_f64();
    let path = m.write_atomic(dir)?;
    eprintln!("wrote {} files and {}", paths.len(), path.display());
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> Outcome {
    let start = Instant::now();
    let cfg = load_config(args)?.sweep;
    cfg.validate()?;
    let report = mcharness::run_sweep(&cfg, args.seed)?;
    let paths = mcharness::write_outputs(&report, &args.out)?;
    let failed_trials: usize = report
        .cells
        .iter()
        .filter_map(|c| c.report.as_ref())
        .map(|r| r.n_trials_failed)
        .sum();
    let failures = report.n_failed_cells + failed_trials;
    finish(RunManifest::new("sweep", args.seed, &cfg), &args.out, &paths, failures, start)
}

fn cmd_taskspace(args: &RunArgs) -> Outcome {
    let start = Instant::now();
    let cfg = load_config(args)?.taskspace;
    cfg.validate()?;
    let report = taskspace::run_taskspace(&cfg, args.seed)?;
    let paths = taskspace::write_outputs(&report, &args.out)?;
    let failures = report.skipped.len();
    finish(RunManifest::new("taskspace", args.seed, &cfg), &args.out, &paths, failures, start)
}

fn cmd_ettm1(args: &RunArgs, data: &Path) -> Outcome {
    let start = Instant::now();
    let cfg = load_config(args)?.ettm1;
    cfg.validate()?;
    let series = mlpx::load_series(data, &cfg.column).map_err(Failure::data)?;
    let need = cfg.train.p + cfg.train.horizon;
    let n_train_part = (series.len() as f64 * cfg.train_frac).floor() as usize;
    let largest = cfg.n_train_grid.iter().max().copied().unwrap_or(0);
    if n_train_part < need + largest - 1 || series.len() - n_train_part < need {
        return Err(Failure::data(format!(
            "{}: series of {} rows is too short for {} training windows of {} lags and horizon {}",
            data.display(),
            series.len(),
            largest,
            cfg.train.p,
            cfg.train.horizon
        )));
    }
    let report = mlpx::run_study(&series, &cfg, args.seed)?;
    let paths = mlpx::train::write_outputs(&report, &args.out)?;
    let failures = report.failed.len();
    finish(RunManifest::new("ettm1", args.seed, &cfg), &args.out, &paths, failures, start)
}
