//! Expressivity of recursive versus direct bilinear two-step predictors in
//! the six-dimensional polynomial task space.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{generate_task_data, psi, sample_task_with, Interval, TaskData, TaskTheta, TASK_DIM};
use crate::error::{Error, Result};
use crate::estimate::ols_solve;
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::polypred::{compose_family, CompositionMap, Monomial, PredictorFamily};
use crate::seeding::{derive_seed, rng_from_seed};
use crate::stats::median;

pub use crate::stats::{ecdf, ecdf_eval, EcdfStep};

/// Number of coordinates reachable by the recursive family.
pub const ALPHA_DIM: usize = 5;

pub const DEFAULT_N_STARTS: usize = 16;

const BOX_STREAM: u64 = 0xB0C5;
const STARTS_SPREAD: f64 = 1.5;

/// Monomials of `psi` in task-space order.
pub fn psi_monomials() -> [Monomial; TASK_DIM] {
    [
        Monomial::var(0),
        Monomial::var(1),
        Monomial::new([(0, 1), (1, 1)]),
        Monomial::new([(0, 2)]),
        Monomial::new([(0, 2), (1, 1)]),
        Monomial::new([(1, 2)]),
    ]
}

/// The map `g: b -> alpha` of the two-step bilinear recursion, with
/// outputs in the first five `psi` coordinates.
#[derive(Debug, Clone)]
pub struct RecursiveManifold {
    map: CompositionMap,
    index: [usize; ALPHA_DIM],
}

impl RecursiveManifold {
    pub fn new() -> Result<Self> {
        let map = compose_family(&PredictorFamily::bilinear(), 2)?;
        let composed = map.composed_monomials();
        let psi = psi_monomials();
        if composed.len() != ALPHA_DIM || composed.contains(&psi[5]) {
            return Err(Error::invalid(
                "bilinear two-step composition does not span the expected monomials",
            ));
        }
        let mut index = [0; ALPHA_DIM];
        for (k, m) in psi[..ALPHA_DIM].iter().enumerate() {
            index[k] = composed
                .iter()
                .position(|c| c == m)
                .ok_or_else(|| Error::invalid(format!("composition lacks the monomial {m}")))?;
        }
        Ok(Self { map, index })
    }

    pub fn map(&self) -> &CompositionMap {
        &self.map
    }

    pub fn g(&self, b: &[f64]) -> [f64; ALPHA_DIM] {
        let a = self.map.alpha_at(b).expect("three parameters");
        std::array::from_fn(|k| a[self.index[k]])
    }

    /// `dg/db`, 5 x 3, rows in `psi` order.
    pub fn jacobian(&self, b: &[f64]) -> DMatrix<f64> {
        let j = self.map.jacobian_at(b).expect("three parameters");
        DMatrix::from_fn(ALPHA_DIM, 3, |r, c| j[(self.index[r], c)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskBox {
    pub alpha_bounds: [Interval; ALPHA_DIM],
    pub theta6_bounds: Interval,
}

impl TaskBox {
    /// All six coordinate intervals.
    pub fn bounds(&self) -> Vec<Interval> {
        let mut v = self.alpha_bounds.to_vec();
        v.push(self.theta6_bounds);
        v
    }
}

/// Coordinatewise bounds of `g(b)` over `n_samples` draws of
/// `b ~ Unif(b_bounds^3)`. Larger `n_samples` extends the same stream.
pub fn build_task_box(n_samples: usize, b_bounds: Interval, seed: u64) -> Result<TaskBox> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    if !(b_bounds.lo <= b_bounds.hi) {
        return Err(Error::invalid("b bounds are empty"));
    }
    let manifold = RecursiveManifold::new()?;
    let mut rng = rng_from_seed(derive_seed(seed, &[BOX_STREAM]));
    let mut lo = [f64::INFINITY; ALPHA_DIM];
    let mut hi = [f64::NEG_INFINITY; ALPHA_DIM];
    for _ in 0..n_samples {
        let b: [f64; 3] = std::array::from_fn(|_| b_bounds.lo + (b_bounds.hi - b_bounds.lo) * rng.gen::<f64>());
        for (k, a) in manifold.g(&b).into_iter().enumerate() {
            lo[k] = lo[k].min(a);
            hi[k] = hi[k].max(a);
        }
    }
    Ok(TaskBox {
        alpha_bounds: std::array::from_fn(|k| Interval::new(lo[k], hi[k])),
        theta6_bounds: Interval::new(-1.5, 1.5),
    })
}

/// Euclidean distance from `theta` to `span{y_t, y_{t-1}, y_t y_{t-1}}`.
pub fn distance_to_direct(theta: &TaskTheta) -> f64 {
    let t = &theta.theta;
    (t[3] * t[3] + t[4] * t[4] + t[5] * t[5]).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub distance: f64,
    pub argmin_b: [f64; 3],
    /// Starts whose local search met neither stopping tolerance.
    pub nonconverged_starts: usize,
}

/// Multi-start starting points: the origin, then `n_starts - 1` draws from
/// `Unif([-1.5, 1.5]^3)`.
fn starts(n_starts: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = rng_from_seed(seed);
    let mut out = vec![[0.0; 3]];
    for _ in 1..n_starts {
        out.push(std::array::from_fn(|_| rng.gen_range(-STARTS_SPREAD..STARTS_SPREAD)));
    }
    out
}

/// Best local minimum of `||W (g(b) - target)||^2` over the starts.
fn project_weighted(
    manifold: &RecursiveManifold,
    target: &[f64; ALPHA_DIM],
    weight: Option<&DMatrix<f64>>,
    n_starts: usize,
    seed: u64,
) -> Result<(f64, [f64; 3], usize)> {
    if n_starts == 0 {
        return Err(Error::invalid("n_starts must be >= 1"));
    }
    let tgt = DVector::from_row_slice(target);
    let f = |b: &[f64]| {
        let r = DVector::from_row_slice(&manifold.g(b)) - &tgt;
        let j = manifold.jacobian(b);
        match weight {
            Some(w) => (w * r, w * j),
            None => (r, j),
        }
    };
    let opts = LmOptions::default();
    let mut best: Option<(f64, [f64; 3])> = None;
    let mut nonconverged = 0;
    for x0 in starts(n_starts, seed) {
        let res = levenberg_marquardt(f, &x0, &opts);
        if !res.converged {
            nonconverged += 1;
        }
        if best.is_none_or(|(c, _)| res.cost < c) {
            best = Some((res.cost, [res.x[0], res.x[1], res.x[2]]));
        }
    }
    let (cost, b) = best.expect("at least one start");
    Ok((cost, b, nonconverged))
}

/// `sqrt(min_b ||P_5 theta - g(b)||^2 + theta_6^2)`.
pub fn distance_to_recursive(theta: &TaskTheta, n_starts: usize, seed: u64) -> Result<Projection> {
    let manifold = RecursiveManifold::new()?;
    distance_to_recursive_on(&manifold, theta, n_starts, seed)
}

pub fn distance_to_recursive_on(
    manifold: &RecursiveManifold,
    theta: &TaskTheta,
    n_starts: usize,
    seed: u64,
) -> Result<Projection> {
    let target: [f64; ALPHA_DIM] = std::array::from_fn(|k| theta.theta[k]);
    let (cost, b, nonconverged) = project_weighted(manifold, &target, None, n_starts, seed)?;
    let t6 = theta.theta[5];
    Ok(Projection {
        distance: (cost + t6 * t6).sqrt(),
        argmin_b: b,
        nonconverged_starts: nonconverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskDataConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub input_std: f64,
    pub noise_std: f64,
}

impl Default for TaskDataConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 2000,
            input_std: 1.0,
            noise_std: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOutcome {
    pub mse_alpha: f64,
    pub mse_c: f64,
    pub fitted_b: [f64; 3],
    pub fitted_c: [f64; 3],
}

fn feature_matrix(data: &TaskData, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(data.len(), k, |i, j| psi(data.inputs[i][0], data.inputs[i][1])[j])
}

fn test_mse(data: &TaskData, coef: &[f64]) -> f64 {
    let k = coef.len();
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| {
            let f = psi(x[0], x[1]);
            let pred: f64 = f[..k].iter().zip(coef).map(|(a, b)| a * b).sum();
            (y - pred) * (y - pred)
        })
        .sum::<f64>()
        / data.len() as f64
}

/// Fits the direct family by OLS and the recursive family by minimizing
/// two-step training error over `b`, then scores both on held-out data.
///
/// The recursive objective `||y - Psi g(b)||^2` equals
/// `||L^T (g(b) - alpha_ols)||^2` plus a constant, where `alpha_ols` is the
/// unconstrained five-term OLS fit and `Psi^T Psi = L L^T`.
pub fn fit_both(theta: &TaskTheta, data_cfg: &TaskDataConfig, n_starts: usize, seed: u64) -> Result<FitOutcome> {
    let manifold = RecursiveManifold::new()?;
    fit_both_on(&manifold, theta, data_cfg, n_starts, seed)
}

pub fn fit_both_on(
    manifold: &RecursiveManifold,
    theta: &TaskTheta,
    cfg: &TaskDataConfig,
    n_starts: usize,
    seed: u64,
) -> Result<FitOutcome> {
    let train = generate_task_data(theta, cfg.n_train, cfg.input_std, cfg.noise_std, derive_seed(seed, &[0]))?;
    let test = generate_task_data(theta, cfg.n_test, cfg.input_std, cfg.noise_std, derive_seed(seed, &[1]))?;
    let y = DVector::from_vec(train.targets.clone());

    let c = ols_solve(&feature_matrix(&train, 3), &y)?;
    let fitted_c = [c[0], c[1], c[2]];

    let psi5 = feature_matrix(&train, ALPHA_DIM);
    let alpha_ols = ols_solve(&psi5, &y)?;
    let gram = psi5.transpose() * &psi5;
    let l = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("recursive design Gram matrix".into()))?
        .l();
    let w = l.transpose();
    let target: [f64; ALPHA_DIM] = std::array::from_fn(|k| alpha_ols[k]);
    let (_, b, _) = project_weighted(manifold, &target, Some(&w), n_starts, derive_seed(seed, &[2]))?;
    let alpha = manifold.g(&b);

    Ok(FitOutcome {
        mse_alpha: test_mse(&test, &alpha),
        mse_c: test_mse(&test, &fitted_c),
        fitted_b: b,
        fitted_c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskOutcome {
    pub index: usize,
    pub theta: TaskTheta,
    pub d_alpha: f64,
    pub d_c: f64,
    pub mse_alpha: f64,
    pub mse_c: f64,
    pub argmin_b: [f64; 3],
    pub nonconverged_starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskspaceConfig {
    pub n_tasks: usize,
    pub n_box_samples: usize,
    pub b_bound: f64,
    pub n_starts: usize,
    pub data: TaskDataConfig,
}

impl Default for TaskspaceConfig {
    fn default() -> Self {
        Self {
            n_tasks: 500,
            n_box_samples: 100_000,
            b_bound: 1.5,
            n_starts: DEFAULT_N_STARTS,
            data: TaskDataConfig::default(),
        }
    }
}

impl TaskspaceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 || self.n_box_samples == 0 || self.n_starts == 0 {
            return Err(Error::invalid("n_tasks, n_box_samples and n_starts must be >= 1"));
        }
        if !(self.b_bound >= 0.0 && self.b_bound.is_finite()) {
            return Err(Error::invalid("b_bound must be finite and >= 0"));
        }
        if self.data.n_train < ALPHA_DIM || self.data.n_test == 0 {
            return Err(Error::invalid("task data needs n_train >= 5 and n_test >= 1"));
        }
        if !(self.data.input_std > 0.0 && self.data.noise_std >= 0.0) {
            return Err(Error::invalid("input_std must be > 0 and noise_std >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskspaceReport {
    pub task_box: TaskBox,
    pub outcomes: Vec<TaskOutcome>,
    /// `(task index, error)` for tasks whose fit failed.
    pub skipped: Vec<(usize, String)>,
    pub median_d_alpha: f64,
    pub median_d_c: f64,
    pub frac_alpha_lower_mse: f64,
    pub frac_c_lower_mse: f64,
}

/// Samples tasks from the box and scores both families on each.
pub fn run_taskspace(cfg: &TaskspaceConfig, seed: u64) -> Result<TaskspaceReport> {
    cfg.validate()?;
    let task_box = build_task_box(cfg.n_box_samples, Interval::new(-cfg.b_bound, cfg.b_bound), seed)?;
    let bounds = task_box.bounds();
    let manifold = RecursiveManifold::new()?;
    let results: Vec<Result<TaskOutcome>> = (0..cfg.n_tasks)
        .into_par_iter()
        .map(|i| {
            let ts = derive_seed(seed, &[i as u64]);
            let mut rng = rng_from_seed(derive_seed(ts, &[0]));
            let theta = sample_task_with(&bounds, &mut rng)?;
            let proj = distance_to_recursive_on(&manifold, &theta, cfg.n_starts, derive_seed(ts, &[1]))?;
            let fit = fit_both_on(&manifold, &theta, &cfg.data, cfg.n_starts, derive_seed(ts, &[2]))?;
            Ok(TaskOutcome {
                index: i,
                theta,
                d_alpha: proj.distance,
                d_c: distance_to_direct(&theta),
                mse_alpha: fit.mse_alpha,
                mse_c: fit.mse_c,
                argmin_b: proj.argmin_b,
                nonconverged_starts: proj.nonconverged_starts,
            })
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e @ (Error::SingularFit { .. } | Error::Singular(_))) => skipped.push((i, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if outcomes.is_empty() {
        return Err(Error::Degenerate("every task fit failed".into()));
    }
    let n = outcomes.len() as f64;
    let d_alpha: Vec<f64> = outcomes.iter().map(|o| o.d_alpha).collect();
    let d_c: Vec<f64> = outcomes.iter().map(|o| o.d_c).collect();
    Ok(TaskspaceReport {
        task_box,
        median_d_alpha: median(&d_alpha),
        median_d_c: median(&d_c),
        frac_alpha_lower_mse: outcomes.iter().filter(|o| o.mse_alpha < o.mse_c).count() as f64 / n,
        frac_c_lower_mse: outcomes.iter().filter(|o| o.mse_c < o.mse_alpha).count() as f64 / n,
        outcomes,
        skipped,
    })
}

pub fn write_tasks_csv<W: Write>(report: &TaskspaceReport, out: W) -> Result<()> {
    let header = [
        "index", "theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "d_alpha", "d_c",
        "mse_alpha", "mse_c", "b1", "b2", "b3", "nonconverged_starts",
    ];
    let rows = report.outcomes.iter().map(|o| {
        let mut r = vec![o.index.to_string()];
        r.extend(o.theta.theta.iter().map(|v| v.to_string()));
        r.extend([o.d_alpha, o.d_c, o.mse_alpha, o.mse_c].iter().map(|v| v.to_string()));
        r.extend(o.argmin_b.iter().map(|v| v.to_string()));
        r.push(o.nonconverged_starts.to_string());
        r
    });
    crate::csvout::write_table(out, &header, rows)
}

pub fn write_ecdf_csv<W: Write>(steps: &[EcdfStep], out: W) -> Result<()> {
    crate::csvout::write_table(
        out,
        &["value", "fraction"],
        steps.iter().map(|s| vec![s.value.to_string(), s.fraction.to_string()]),
    )
}

/// Writes `tasks.csv`, `ecdf_alpha.csv`, `ecdf_c.csv` and `summary.json`.
pub fn write_outputs(report: &TaskspaceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let tasks = dir.join("tasks.csv");
    let ea = dir.join("ecdf_alpha.csv");
    let ec = dir.join("ecdf_c.csv");
    let summary = dir.join("summary.json");
    write_tasks_csv(report, std::fs::File::create(&tasks)?)?;
    let d_alpha: Vec<f64> = report.outcomes.iter().map(|o| o.d_alpha).collect();
    let d_c: Vec<f64> = report.outcomes.iter().map(|o| o.d_c).collect();
    write_ecdf_csv(&ecdf(&d_alpha)?, std::fs::File::create(&ea)?)?;
    write_ecdf_csv(&ecdf(&d_c)?, std::fs::File::create(&ec)?)?;
    let js = serde_json::json!({
        "task_box": report.task_box,
        "n_tasks": report.outcomes.len(),
        "skipped": report.skipped,
        "median_d_alpha": report.median_d_alpha,
        "median_d_c": report.median_d_c,
        "frac_alpha_lower_mse": report.frac_alpha_lower_mse,
        "frac_c_lower_mse": report.frac_c_lower_mse,
    });
    let mut f = std::io::BufWriter::new(std::fs::File::create(&summary)?);
    serde_json::to_writer_pretty(&mut f, &js).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(vec![tasks, ea, ec, summary])
}
