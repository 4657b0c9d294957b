//! Monte Carlo engine for linear AR(2) recursive-vs-direct sweeps.
//!
//! Each cell fixes `(a, gamma, sigma_s, sigma_e)`, draws one evaluation
//! series and `n_seeds` training series, fits a one-step and a direct
//! `h`-step OLS model per training series, derives the recursive `h`-step
//! coefficients by composition, and compares delta-method theory against
//! across-seed prediction variance.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{simulate_ar2, Ar2Params, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::estimate::{
    build_design, composed_features, empirical_param_cov, ols_fit, ols_param_cov, second_moment,
    MomentKind, MomentMatrix, ParamCov,
};
use crate::evtheory::{aleatoric_floor, ev_direct, ev_recursive, AleatoricFloors, EvReport};
use crate::polypred::{compose_family, linear_two_step_map, CompositionMap, PredictorFamily};
use crate::seeding::{derive_seed, EVAL_STREAM};
use crate::stats::{mean, median, pearson};

/// Lag order of every model fitted by the harness.
pub const LAGS: usize = 2;

/// Fraction of failed trials (or cells) above which the enclosing unit fails.
pub const MAX_FAILURE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    /// `(sigma2_eps / N) Q^{-1}` with the closed-form floor as residual variance.
    Analytic,
    /// Sample covariance of the fitted coefficients across seeds.
    #[default]
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JacobianPoint {
    /// Across-seed mean of the fitted one-step coefficients.
    MeanFit,
    /// The generating `(a, gamma)`.
    #[default]
    TrueParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub a_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub sigma_s_grid: Vec<f64>,
    pub sigma_e_grid: Vec<f64>,
    pub n_train: usize,
    pub n_eval: usize,
    pub n_seeds: usize,
    pub horizon: usize,
    pub burn_in: usize,
    pub sigma_source: SigmaSource,
    pub jacobian_point: JacobianPoint,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let sig = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        Self {
            a_grid: vec![-0.6, -0.3, 0.0, 0.3, 0.6],
            gamma_grid: vec![-0.6, -0.35, -0.1, 0.15, 0.3],
            sigma_s_grid: sig.clone(),
            sigma_e_grid: sig,
            n_train: 2000,
            n_eval: 5000,
            n_seeds: 50,
            horizon: 2,
            burn_in: DEFAULT_BURN_IN,
            sigma_source: SigmaSource::default(),
            jacobian_point: JacobianPoint::default(),
        }
    }
}

/// One stable `(a, gamma)` grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub a_idx: usize,
    pub gamma_idx: usize,
    pub a: f64,
    pub gamma: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("a_grid", &self.a_grid),
            ("gamma_grid", &self.gamma_grid),
            ("sigma_s_grid", &self.sigma_s_grid),
            ("sigma_e_grid", &self.sigma_e_grid),
        ] {
            if g.is_empty() {
                return Err(Error::invalid(format!("{name} must be nonempty")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} has a non-finite entry")));
            }
        }
        for (name, g) in [("sigma_s_grid", &self.sigma_s_grid), ("sigma_e_grid", &self.sigma_e_grid)] {
            if g.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid(format!("{name} entries must be >= 0")));
            }
        }
        if self.n_train < 2 * LAGS || self.n_eval < 2 {
            return Err(Error::invalid("n_train must be >= 4 and n_eval >= 2"));
        }
        if self.n_seeds < 2 {
            return Err(Error::invalid("n_seeds must be >= 2"));
        }
        if self.horizon < 2 {
            return Err(Error::invalid("horizon must be >= 2"));
        }
        if self.sigma_source == SigmaSource::Analytic && self.horizon > 2 {
            return Err(Error::UnsupportedHorizon(self.horizon));
        }
        if self.stable_cells().is_empty() {
            return Err(Error::invalid("no stable cells: every (a, gamma) grid point is outside the stationarity region"));
        }
        if self.noise_configs().is_empty() {
            return Err(Error::invalid(
                "every noise configuration has sigma_s = sigma_e = 0",
            ));
        }
        Ok(())
    }

    /// Stable grid points in `a`-major order. Indices count all grid points,
    /// stable or not, so they do not shift when the grid filter changes.
    pub fn stable_cells(&self) -> Vec<GridCell> {
        let ng = self.gamma_grid.len();
        let mut out = Vec::new();
        for (ia, &a) in self.a_grid.iter().enumerate() {
            for (ig, &gamma) in self.gamma_grid.iter().enumerate() {
                if crate::dgp::is_stable(a, gamma) {
                    out.push(GridCell {
                        index: ia * ng + ig,
                        a_idx: ia,
                        gamma_idx: ig,
                        a,
                        gamma,
                    });
                }
            }
        }
        out
    }

    /// `(sigma_s, sigma_e)` pairs in `sigma_s`-major order, without the
    /// noiseless pair.
    pub fn noise_configs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &s in &self.sigma_s_grid {
            for &e in &self.sigma_e_grid {
                if s > 0.0 || e > 0.0 {
                    out.push((s, e));
                }
            }
        }
        out
    }

    pub fn skipped_noise_configs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &s in &self.sigma_s_grid {
            for &e in &self.sigma_e_grid {
                if s == 0.0 && e == 0.0 {
                    out.push((s, e));
                }
            }
        }
        out
    }

    fn series_len(&self, n: usize) -> usize {
        n + LAGS + self.horizon - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    pub fitted_one_step: [f64; 2],
    pub fitted_direct: [f64; 2],
    pub derived_recursive: [f64; 2],
    pub mse_rec: f64,
    pub mse_dir: f64,
    pub mse_one_step: f64,
    #[serde(skip)]
    pub predictions: TrialPredictions,
}

/// Per-evaluation-point predictions of one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialPredictions {
    pub recursive: Vec<f64>,
    pub direct: Vec<f64>,
    pub one_step: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub params: Ar2Params,
    pub horizon: usize,
    pub ev_theory_rec: f64,
    pub ev_theory_dir: f64,
    pub ev_theory_one: f64,
    pub ev_emp_rec: f64,
    pub ev_emp_dir: f64,
    pub ev_emp_one: f64,
    pub t_h: f64,
    /// Per-evaluation-point correlation of theoretical and empirical
    /// recursive variance; `None` when either side has zero spread.
    pub pearson_r: Option<f64>,
    pub bias_distance: f64,
    pub mean_one_step: [f64; 2],
    pub mse_rec: f64,
    pub mse_dir: f64,
    pub floors: AleatoricFloors,
    /// Recursive-minus-direct EV from the closed-form floors, Jacobian at
    /// the true parameters.
    pub delta_ev_analytic: f64,
    pub rec_wins_analytic: bool,
    pub rec_wins_empirical: bool,
    pub n_trials_ok: usize,
    pub n_trials_failed: usize,
}

impl CellReport {
    /// `|EV_1 theory - EV_1 empirical| / EV_1 empirical`.
    pub fn one_step_rel_error(&self) -> f64 {
        (self.ev_theory_one - self.ev_emp_one).abs() / self.ev_emp_one
    }
}

/// Mean over evaluation points of the across-seed sample variance.
/// `per_seed[s][i]` is seed `s`'s prediction at point `i`.
pub fn empirical_ev(per_seed: &[Vec<f64>]) -> Result<f64> {
    Ok(mean(&pointwise_variance(per_seed)?))
}

/// Across-seed sample variance (divisor n - 1) at each evaluation point.
pub fn pointwise_variance(per_seed: &[Vec<f64>]) -> Result<Vec<f64>> {
    let s = per_seed.len();
    if s < 2 {
        return Err(Error::TooFewSamples { need: 2, got: s });
    }
    let n = per_seed[0].len();
    if let Some(bad) = per_seed.iter().find(|r| r.len() != n) {
        return Err(Error::Shape {
            what: "per-seed predictions",
            expected: n,
            got: bad.len(),
        });
    }
    if n == 0 {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut means = vec![0.0; n];
    for row in per_seed {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in means.iter_mut() {
        *m /= s as f64;
    }
    let mut var = vec![0.0; n];
    for row in per_seed {
        for ((acc, m), v) in var.iter_mut().zip(&means).zip(row) {
            let d = v - m;
            *acc += d * d;
        }
    }
    for v in var.iter_mut() {
        *v /= (s - 1) as f64;
    }
    Ok(var)
}

fn mse(pred: &[f64], target: &DVector<f64>) -> f64 {
    pred.iter()
        .zip(target.iter())
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / pred.len() as f64
}

fn predict(rows: &DMatrix<f64>, coef: &[f64]) -> Vec<f64> {
    (rows * DVector::from_column_slice(coef)).iter().copied().collect()
}

fn recursive_coefficients(map: &CompositionMap, b: [f64; 2]) -> Result<[f64; 2]> {
    if map.horizon() == 2 {
        let (a1, a2) = linear_two_step_map((b[0], b[1]));
        return Ok([a1, a2]);
    }
    let alpha = map.alpha_at(&b)?;
    Ok([alpha[0], alpha[1]])
}

struct EvalSet {
    rows: DMatrix<f64>,
    targets: DVector<f64>,
    one_step_targets: DVector<f64>,
}

fn eval_set(params: Ar2Params, cfg: &SweepConfig, seed: u64) -> Result<EvalSet> {
    let s = simulate_ar2(params, cfg.series_len(cfg.n_eval), cfg.burn_in, seed)?;
    let d = build_design(&s.observed, LAGS, cfg.horizon)?;
    // the one-step target of each row is the next observation
    let one = DVector::from_fn(d.n(), |i, _| s.observed[LAGS + i]);
    Ok(EvalSet {
        rows: d.rows,
        targets: d.targets,
        one_step_targets: one,
    })
}

fn run_trial(
    params: Ar2Params,
    cfg: &SweepConfig,
    map: &CompositionMap,
    eval: &EvalSet,
    seed: u64,
) -> Result<TrialResult> {
    let s = simulate_ar2(params, cfg.series_len(cfg.n_train), cfg.burn_in, seed)?;
    let mut obs = s.observed;
    // both fits see the same n_train rows
    let one_design = build_design(&obs[..cfg.n_train + LAGS], LAGS, 1)?;
    let b = ols_fit(&one_design)?;
    let dir_design = build_design(&obs, LAGS, cfg.horizon)?;
    let c = ols_fit(&dir_design)?;
    obs.clear();
    let b = [b[0], b[1]];
    let c = [c[0], c[1]];
    let alpha = recursive_coefficients(map, b)?;
    let predictions = TrialPredictions {
        recursive: predict(&eval.rows, &alpha),
        direct: predict(&eval.rows, &c),
        one_step: predict(&eval.rows, &b),
    };
    Ok(TrialResult {
        seed,
        fitted_one_step: b,
        fitted_direct: c,
        derived_recursive: alpha,
        mse_rec: mse(&predictions.recursive, &eval.targets),
        mse_dir: mse(&predictions.direct, &eval.targets),
        mse_one_step: mse(&predictions.one_step, &eval.one_step_targets),
        predictions,
    })
}

/// Cell seed derived from the base seed and the cell's grid index.
pub fn cell_seed(base_seed: u64, cell_index: usize) -> u64 {
    derive_seed(base_seed, &[cell_index as u64])
}

/// Runs one cell with seeds derived from `base_seed` (cell index 0).
pub fn run_cell(params: Ar2Params, cfg: &SweepConfig, base_seed: u64) -> Result<CellReport> {
    run_cell_seeded(params, cfg, cell_seed(base_seed, 0))
}

/// Runs one cell from an already-derived cell seed.
pub fn run_cell_seeded(params: Ar2Params, cfg: &SweepConfig, seed: u64) -> Result<CellReport> {
    let trial_seeds: Vec<u64> = (0..cfg.n_seeds)
        .map(|t| derive_seed(seed, &[t as u64]))
        .collect();
    run_cell_with_seeds(params, cfg, derive_seed(seed, &[EVAL_STREAM]), &trial_seeds)
}

/// Runs one cell with explicit evaluation and trial seeds.
pub fn run_cell_with_seeds(
    params: Ar2Params,
    cfg: &SweepConfig,
    eval_seed: u64,
    trial_seeds: &[u64],
) -> Result<CellReport> {
    if !params.is_stable() {
        return Err(Error::invalid(format!(
            "cell (a={}, gamma={}) is not stationary",
            params.a, params.gamma
        )));
    }
    if trial_seeds.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: trial_seeds.len(),
        });
    }
    let map = compose_family(&PredictorFamily::linear(LAGS), cfg.horizon)?;
    let eval = eval_set(params, cfg, eval_seed)?;

    let outcomes: Vec<Result<TrialResult>> = trial_seeds
        .par_iter()
        .map(|&s| run_trial(params, cfg, &map, &eval, s))
        .collect();
    let mut trials = Vec::with_capacity(outcomes.len());
    let mut failed = 0usize;
    let mut last_err = None;
    for o in outcomes {
        match o {
            Ok(t) => trials.push(t),
            Err(e @ Error::SingularFit { .. }) => {
                failed += 1;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * trial_seeds.len() as f64 || trials.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{failed} of {} trials failed; last error: {}",
            trial_seeds.len(),
            last_err.map(|e| e.to_string()).unwrap_or_default()
        )));
    }
    summarize_cell(params, cfg, &map, &eval, &trials, failed)
}

fn summarize_cell(
    params: Ar2Params,
    cfg: &SweepConfig,
    map: &CompositionMap,
    eval: &EvalSet,
    trials: &[TrialResult],
    failed: usize,
) -> Result<CellReport> {
    let h = cfg.horizon;
    let rec: Vec<Vec<f64>> = trials.iter().map(|t| t.predictions.recursive.clone()).collect();
    let dir: Vec<Vec<f64>> = trials.iter().map(|t| t.predictions.direct.clone()).collect();
    let one: Vec<Vec<f64>> = trials.iter().map(|t| t.predictions.one_step.clone()).collect();
    let rec_var = pointwise_variance(&rec)?;
    let ev_emp_rec = mean(&rec_var);
    let ev_emp_dir = empirical_ev(&dir)?;
    let ev_emp_one = empirical_ev(&one)?;

    let b_samples: Vec<Vec<f64>> = trials.iter().map(|t| t.fitted_one_step.to_vec()).collect();
    let c_samples: Vec<Vec<f64>> = trials.iter().map(|t| t.fitted_direct.to_vec()).collect();
    let mean_b = [
        mean(&b_samples.iter().map(|b| b[0]).collect::<Vec<_>>()),
        mean(&b_samples.iter().map(|b| b[1]).collect::<Vec<_>>()),
    ];

    let q = second_moment(&eval.rows)?;
    let feats = composed_features(&eval.rows, &map.composed_monomials());
    let q_tilde = MomentMatrix {
        m: second_moment(&feats)?.m,
        kind: MomentKind::Composed,
    };
    let floors = AleatoricFloors::new(params);
    let truth = params.one_step();
    let j_point = match cfg.jacobian_point {
        JacobianPoint::MeanFit => mean_b,
        JacobianPoint::TrueParams => truth,
    };
    let j = map.jacobian_at(&j_point)?;
    let (sigma_one, sigma_dir) = match cfg.sigma_source {
        SigmaSource::Analytic => (
            ols_param_cov(floors.sigma2_eps1, cfg.n_train, &q)?,
            ols_param_cov(aleatoric_floor(&params, h)?, cfg.n_train, &q)?,
        ),
        SigmaSource::Empirical => (empirical_param_cov(&b_samples)?, empirical_param_cov(&c_samples)?),
    };
    let report = EvReport::compute(h, &j, &sigma_one, &sigma_dir, &q_tilde, &q)?;

    let pearson_r = pointwise_theory(&j, &sigma_one, &feats)
        .and_then(|theory| pearson(&theory, &rec_var))
        .ok();

    let delta_ev_analytic = analytic_delta_ev(&params, cfg, map, &q, &q_tilde)?;
    let mse_rec = mean(&trials.iter().map(|t| t.mse_rec).collect::<Vec<_>>());
    let mse_dir = mean(&trials.iter().map(|t| t.mse_dir).collect::<Vec<_>>());
    let bias_distance = ((truth[0] - mean_b[0]).powi(2) + (truth[1] - mean_b[1]).powi(2)).sqrt();

    Ok(CellReport {
        params,
        horizon: h,
        ev_theory_rec: report.ev_rec,
        ev_theory_dir: report.ev_dir,
        ev_theory_one: report.ev_one_step,
        ev_emp_rec,
        ev_emp_dir,
        ev_emp_one,
        t_h: report.t_h,
        pearson_r,
        bias_distance,
        mean_one_step: mean_b,
        mse_rec,
        mse_dir,
        floors,
        delta_ev_analytic,
        rec_wins_analytic: delta_ev_analytic < 0.0,
        rec_wins_empirical: mse_rec < mse_dir,
        n_trials_ok: trials.len(),
        n_trials_failed: failed,
    })
}

/// `x~_i^T J Sigma J^T x~_i` at each evaluation point.
fn pointwise_theory(j: &DMatrix<f64>, sigma: &ParamCov, feats: &DMatrix<f64>) -> Result<Vec<f64>> {
    let a = j * &sigma.sigma * j.transpose();
    let a = (&a + a.transpose()) * 0.5;
    Ok((0..feats.nrows())
        .map(|i| {
            let x = feats.row(i);
            (x * &a * x.transpose())[(0, 0)]
        })
        .collect())
}

/// `EV_rec - EV_dir` with well-specified OLS covariances built from the
/// closed-form floors and the Jacobian at the true parameters.
fn analytic_delta_ev(
    params: &Ar2Params,
    cfg: &SweepConfig,
    map: &CompositionMap,
    q: &MomentMatrix,
    q_tilde: &MomentMatrix,
) -> Result<f64> {
    let s1 = ols_param_cov(aleatoric_floor(params, 1)?, cfg.n_train, q)?;
    let sh = ols_param_cov(aleatoric_floor(params, cfg.horizon)?, cfg.n_train, q)?;
    let j = map.jacobian_at(&params.one_step())?;
    Ok(ev_recursive(&j, &s1, q_tilde)? - ev_direct(&sh, q)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub noise_idx: usize,
    pub cell: GridCell,
    pub sigma_s: f64,
    pub sigma_e: f64,
    pub report: Option<CellReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSummary {
    pub sigma_s: f64,
    pub sigma_e: f64,
    pub n_cells: usize,
    pub n_failed: usize,
    /// Across-cell correlation of theoretical and empirical recursive EV.
    pub corr_ev_rec: Option<f64>,
    pub corr_ev_dir: Option<f64>,
    pub mean_bias_distance: f64,
    /// `(a_idx, gamma_idx, bias_distance)` per successful cell.
    pub bias_map: Vec<(usize, usize, f64)>,
    pub prop_rec_wins_analytic: f64,
    pub prop_rec_wins_empirical: f64,
    pub winner_agreement: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub base_seed: u64,
    pub cells: Vec<CellRecord>,
    pub summaries: Vec<NoiseSummary>,
    pub skipped_noise_configs: Vec<(f64, f64)>,
    /// Winner agreement over cells whose `sigma_e` is at or below the grid median.
    pub low_sigma_e_agreement: Option<f64>,
    pub n_failed_cells: usize,
}

impl SweepReport {
    pub fn summary(&self, sigma_s: f64, sigma_e: f64) -> Option<&NoiseSummary> {
        self.summaries
            .iter()
            .find(|s| s.sigma_s == sigma_s && s.sigma_e == sigma_e)
    }
}

/// Runs every stable grid cell under every noise configuration. Cells
/// sharing an `(a, gamma)` index share seeds across noise configurations.
pub fn run_sweep(cfg: &SweepConfig, base_seed: u64) -> Result<SweepReport> {
    cfg.validate()?;
    let cells = cfg.stable_cells();
    let noise = cfg.noise_configs();
    let jobs: Vec<(usize, GridCell)> = (0..noise.len())
        .flat_map(|n| cells.iter().map(move |&c| (n, c)))
        .collect();
    let records: Vec<CellRecord> = jobs
        .par_iter()
        .map(|&(ni, cell)| {
            let (s, e) = noise[ni];
            let params = Ar2Params::new(cell.a, cell.gamma, s, e);
            let out = run_cell_seeded(params, cfg, cell_seed(base_seed, cell.index));
            let (report, error) = match out {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            CellRecord {
                noise_idx: ni,
                cell,
                sigma_s: s,
                sigma_e: e,
                report,
                error,
            }
        })
        .collect();

    let summaries: Vec<NoiseSummary> = noise
        .iter()
        .enumerate()
        .map(|(ni, &(s, e))| summarize_noise(s, e, records.iter().filter(|r| r.noise_idx == ni)))
        .collect();

    let e_med = median(&cfg.sigma_e_grid);
    let low: Vec<&CellReport> = records
        .iter()
        .filter(|r| r.sigma_e <= e_med)
        .filter_map(|r| r.report.as_ref())
        .collect();
    let low_sigma_e_agreement = (!low.is_empty()).then(|| {
        low.iter()
            .filter(|r| r.rec_wins_analytic == r.rec_wins_empirical)
            .count() as f64
            / low.len() as f64
    });
    let n_failed_cells = records.iter().filter(|r| r.report.is_none()).count();
    if n_failed_cells as f64 > MAX_FAILURE_FRACTION * records.len() as f64 {
        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Degenerate(format!(
            "{n_failed_cells} of {} cells failed; first error: {first}",
            records.len()
        )));
    }
    Ok(SweepReport {
        config: cfg.clone(),
        base_seed,
        cells: records,
        summaries,
        skipped_noise_configs: cfg.skipped_noise_configs(),
        low_sigma_e_agreement,
        n_failed_cells,
    })
}

fn summarize_noise<'a>(
    sigma_s: f64,
    sigma_e: f64,
    records: impl Iterator<Item = &'a CellRecord>,
) -> NoiseSummary {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    let mut n_cells = 0;
    for r in records {
        n_cells += 1;
        match (&r.report, &r.error) {
            (Some(rep), _) => ok.push((r.cell, rep)),
            (None, Some(e)) => failures.push(format!("a={} gamma={}: {e}", r.cell.a, r.cell.gamma)),
            (None, None) => failures.push(format!("a={} gamma={}: no result", r.cell.a, r.cell.gamma)),
        }
    }
    let col = |f: fn(&CellReport) -> f64| ok.iter().map(|(_, r)| f(r)).collect::<Vec<f64>>();
    let corr_ev_rec = pearson(&col(|r| r.ev_theory_rec), &col(|r| r.ev_emp_rec)).ok();
    let corr_ev_dir = pearson(&col(|r| r.ev_theory_dir), &col(|r| r.ev_emp_dir)).ok();
    let frac = |pred: fn(&CellReport) -> bool| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().filter(|(_, r)| pred(r)).count() as f64 / ok.len() as f64
        }
    };
    NoiseSummary {
        sigma_s,
        sigma_e,
        n_cells,
        n_failed: failures.len(),
        corr_ev_rec,
        corr_ev_dir,
        mean_bias_distance: mean(&col(|r| r.bias_distance)),
        bias_map: ok
            .iter()
            .map(|(c, r)| (c.a_idx, c.gamma_idx, r.bias_distance))
            .collect(),
        prop_rec_wins_analytic: frac(|r| r.rec_wins_analytic),
        prop_rec_wins_empirical: frac(|r| r.rec_wins_empirical),
        winner_agreement: frac(|r| r.rec_wins_analytic == r.rec_wins_empirical),
        failures,
    }
}

pub const CELLS_HEADER: [&str; 27] = [
    "sigma_s",
    "sigma_e",
    "a",
    "gamma",
    "a_idx",
    "gamma_idx",
    "ev_theory_rec",
    "ev_theory_dir",
    "ev_theory_one",
    "ev_emp_rec",
    "ev_emp_dir",
    "ev_emp_one",
    "t_h",
    "pearson_r",
    "bias_distance",
    "mean_b1",
    "mean_b2",
    "mse_rec",
    "mse_dir",
    "sigma2_eps1",
    "sigma2_eps2",
    "delta_ev_analytic",
    "rec_wins_analytic",
    "rec_wins_empirical",
    "n_trials_ok",
    "n_trials_failed",
    "error",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell record, failed cells included with empty metrics.
pub fn write_cells_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let rows = report.cells.iter().map(|rec| {
        let mut row = vec![
            rec.sigma_s.to_string(),
            rec.sigma_e.to_string(),
            rec.cell.a.to_string(),
            rec.cell.gamma.to_string(),
            rec.cell.a_idx.to_string(),
            rec.cell.gamma_idx.to_string(),
        ];
        match &rec.report {
            Some(r) => row.extend([
                r.ev_theory_rec.to_string(),
                r.ev_theory_dir.to_string(),
                r.ev_theory_one.to_string(),
                r.ev_emp_rec.to_string(),
                r.ev_emp_dir.to_string(),
                r.ev_emp_one.to_string(),
                r.t_h.to_string(),
                fmt_opt(r.pearson_r),
                r.bias_distance.to_string(),
                r.mean_one_step[0].to_string(),
                r.mean_one_step[1].to_string(),
                r.mse_rec.to_string(),
                r.mse_dir.to_string(),
                r.floors.sigma2_eps1.to_string(),
                r.floors.sigma2_eps2.to_string(),
                r.delta_ev_analytic.to_string(),
                r.rec_wins_analytic.to_string(),
                r.rec_wins_empirical.to_string(),
                r.n_trials_ok.to_string(),
                r.n_trials_failed.to_string(),
                String::new(),
            ]),
            None => {
                row.extend(std::iter::repeat_n(String::new(), CELLS_HEADER.len() - 7));
                row.push(rec.error.clone().unwrap_or_default());
            }
        }
        row
    });
    crate::csvout::write_table(out, &CELLS_HEADER, rows)
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    base_seed: u64,
    config: &'a SweepConfig,
    n_cells: usize,
    n_failed_cells: usize,
    skipped_noise_configs: &'a [(f64, f64)],
    low_sigma_e_agreement: Option<f64>,
    noise_configs: &'a [NoiseSummary],
}

pub fn write_summary_json<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let s = SummaryJson {
        base_seed: report.base_seed,
        config: &report.config,
        n_cells: report.cells.len(),
        n_failed_cells: report.n_failed_cells,
        skipped_noise_configs: &report.skipped_noise_configs,
        low_sigma_e_agreement: report.low_sigma_e_agreement,
        noise_configs: &report.summaries,
    };
    serde_json::to_writer_pretty(out, &s).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `cells.csv` and `summary.json` into `dir`.
pub fn write_outputs(report: &SweepReport, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let cells = dir.join("cells.csv");
    let summary = dir.join("summary.json");
    write_cells_csv(report, std::fs::File::create(&cells)?)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(&summary)?);
    write_summary_json(report, &mut f)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(vec![cells, summary])
}
