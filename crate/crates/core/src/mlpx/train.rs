//! Adam training loop, run records, ratio metrics and the seed/size study.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{split_standardize, WindowSet};
use super::net::{eval_mse, loss_and_grad, network_shape, MlpParams, Strategy, TwoStepLoss};
use crate::csvout::write_table;
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_from_seed};
use crate::stats::{mean, sample_variance};

pub const MAX_FAILURE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub p: usize,
    pub horizon: usize,
    pub width: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Below this many windows each epoch is a single full batch.
    pub full_batch_below: usize,
    pub loss: TwoStepLoss,
    pub n_train: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            p: 50,
            horizon: 2,
            width: 2,
            lr: 1e-3,
            epochs: 200,
            batch_size: 128,
            full_batch_below: 512,
            loss: TwoStepLoss::FinalStep,
            n_train: 4096,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.horizon == 0 || self.width == 0 {
            return Err(Error::invalid("p, horizon and width must be >= 1"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.n_train == 0 {
            return Err(Error::invalid("epochs, batch_size and n_train must be >= 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub n_train: usize,
    pub seed: u64,
    /// Step-`h` MSE on the training windows after the last epoch.
    pub train_mse: f64,
    /// Step-`h` MSE on the test windows after the last epoch.
    pub test_mse: f64,
    /// Index 0 is before the first update.
    pub curve: Vec<EpochPoint>,
}

impl RunRecord {
    pub fn key(&self) -> String {
        format!("{}_n{}_s{}", self.strategy.name(), self.n_train, self.seed)
    }

    pub fn train_curve(&self) -> Vec<f64> {
        self.curve.iter().map(|c| c.train_mse).collect()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            x[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains one network; returns the record and the final parameters.
///
/// `train` must hold at least `cfg.n_train` windows; the most recent ones
/// are used.
pub fn train_with_params(
    train: &WindowSet,
    test: &WindowSet,
    cfg: &TrainConfig,
    strategy: Strategy,
) -> Result<(RunRecord, MlpParams)> {
    cfg.validate()?;
    if train.p() != cfg.p || train.horizon() != cfg.horizon || test.p() != cfg.p || test.horizon() != cfg.horizon {
        return Err(Error::invalid("window sets do not match the configured lags and horizon"));
    }
    if train.len() < cfg.n_train {
        return Err(Error::TooFewSamples {
            need: cfg.n_train,
            got: train.len(),
        });
    }
    let data = train.tail(cfg.n_train)?;
    let mut rng = rng_from_seed(cfg.seed);
    let (i, hd, o) = network_shape(strategy, cfg.p, cfg.width, cfg.horizon);
    let mut params = MlpParams::init(i, hd, o, &mut rng);
    let mut flat = params.flat();
    let mut adam = Adam::new(flat.len());
    let batch = if cfg.n_train < cfg.full_batch_below {
        cfg.n_train
    } else {
        cfg.batch_size
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let point = |params: &MlpParams, epoch: usize| -> Result<EpochPoint> {
        let p = EpochPoint {
            epoch,
            train_mse: eval_mse(params, &data, strategy)?,
            test_mse: eval_mse(params, test, strategy)?,
        };
        if !(p.train_mse.is_finite() && p.test_mse.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        Ok(p)
    };
    let mut curve = vec![point(&params, 0)?];
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let (loss, grad) = loss_and_grad(&params, &data, chunk, strategy, cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            adam.step(&mut flat, &grad, cfg.lr);
            params.set_flat(&flat);
        }
        curve.push(point(&params, epoch)?);
    }
    let last = *curve.last().expect("curve has the initial point");
    Ok((
        RunRecord {
            strategy,
            n_train: cfg.n_train,
            seed: cfg.seed,
            train_mse: last.train_mse,
            test_mse: last.test_mse,
            curve,
        },
        params,
    ))
}

pub fn train(train: &WindowSet, test: &WindowSet, cfg: &TrainConfig, strategy: Strategy) -> Result<RunRecord> {
    train_with_params(train, test, cfg, strategy).map(|(r, _)| r)
}

/// True when the last `tail_frac` of the curve improves by less than `tol`
/// relative to its starting value.
pub fn plateau(curve: &[f64], tail_frac: f64, tol: f64) -> bool {
    if curve.len() < 2 {
        return false;
    }
    let last = curve.len() - 1;
    let start = last - ((last as f64 * tail_frac).ceil() as usize).clamp(1, last);
    let (a, b) = (curve[start], curve[last]);
    a > 0.0 && (a - b) / a < tol
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n_train: usize,
    pub n_seeds_rec: usize,
    pub n_seeds_dir: usize,
    pub mean_train_rec: f64,
    pub mean_train_dir: f64,
    pub mean_test_rec: f64,
    pub mean_test_dir: f64,
    pub var_test_rec: f64,
    pub var_test_dir: f64,
    pub rho_mse_train: f64,
    pub rho_mse_test: f64,
    pub rho_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn row(&self, n_train: usize) -> Option<&RatioRow> {
        self.rows.iter().find(|r| r.n_train == n_train)
    }

    pub fn largest(&self) -> Option<&RatioRow> {
        self.rows.last()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn seed_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        0.0
    } else {
        sample_variance(v)
    }
}

/// Across-seed means and variances per `n_train`; ratios are recursive over
/// direct. Both strategies must be present at every size.
pub fn ratio_report(records: &[RunRecord]) -> Result<RatioReport> {
    let mut groups: BTreeMap<usize, [Vec<&RunRecord>; 2]> = BTreeMap::new();
    for r in records {
        let slot = match r.strategy {
            Strategy::Recursive => 0,
            Strategy::Direct => 1,
        };
        groups.entry(r.n_train).or_default()[slot].push(r);
    }
    let mut rows = Vec::new();
    for (n_train, [rec, dir]) in groups {
        if rec.is_empty() || dir.is_empty() {
            return Err(Error::Data(format!(
                "n_train {n_train}: need runs of both strategies, got {} recursive and {} direct",
                rec.len(),
                dir.len()
            )));
        }
        // sorting makes the floating-point sums independent of record order
        let sorted = |rs: &[&RunRecord], f: fn(&RunRecord) -> f64| {
            let mut v: Vec<f64> = rs.iter().map(|r| f(r)).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let tr_r = sorted(&rec, |r| r.train_mse);
        let tr_d = sorted(&dir, |r| r.train_mse);
        let te_r = sorted(&rec, |r| r.test_mse);
        let te_d = sorted(&dir, |r| r.test_mse);
        let (var_r, var_d) = (seed_variance(&te_r), seed_variance(&te_d));
        rows.push(RatioRow {
            n_train,
            n_seeds_rec: rec.len(),
            n_seeds_dir: dir.len(),
            mean_train_rec: mean(&tr_r),
            mean_train_dir: mean(&tr_d),
            mean_test_rec: mean(&te_r),
            mean_test_dir: mean(&te_d),
            var_test_rec: var_r,
            var_test_dir: var_d,
            rho_mse_train: ratio(mean(&tr_r), mean(&tr_d)),
            rho_mse_test: ratio(mean(&te_r), mean(&te_d)),
            rho_var: ratio(var_r, var_d),
        });
    }
    Ok(RatioReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub column: String,
    pub train_frac: f64,
    pub n_train_grid: Vec<usize>,
    pub n_seeds: usize,
    pub train: TrainConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            column: "OT".into(),
            train_frac: 0.6,
            n_train_grid: vec![256, 1024, 4096, 16384],
            n_seeds: 20,
            train: TrainConfig::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.n_train_grid.is_empty() || self.n_train_grid.contains(&0) {
            return Err(Error::invalid("n_train_grid must be nonempty with positive entries"));
        }
        if self.n_seeds == 0 {
            return Err(Error::invalid("n_seeds must be >= 1"));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::invalid(format!("train_frac must be in (0, 1), got {}", self.train_frac)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedRun {
    pub strategy: Strategy,
    pub n_train: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub base_seed: u64,
    pub n_series: usize,
    pub n_train_windows: usize,
    pub n_test_windows: usize,
    pub records: Vec<RunRecord>,
    pub failed: Vec<FailedRun>,
    pub ratios: RatioReport,
}

impl StudyReport {
    /// Fraction of runs at the largest `n_train` whose train curve plateaus.
    pub fn plateau_fraction(&self) -> f64 {
        let Some(&n) = self.config.n_train_grid.iter().max() else {
            return 0.0;
        };
        let at: Vec<_> = self.records.iter().filter(|r| r.n_train == n).collect();
        if at.is_empty() {
            return 0.0;
        }
        at.iter().filter(|r| plateau(&r.train_curve(), 0.2, 0.01)).count() as f64 / at.len() as f64
    }
}

/// Seed of run `(n_train, seed_index)`; both strategies share it.
pub fn run_seed(base: u64, n_train: usize, seed_index: usize) -> u64 {
    derive_seed(base, &[n_train as u64, seed_index as u64])
}

/// Trains every (size, seed, strategy) combination on a standardized
/// chronological split of `series`.
pub fn run_study(series: &[f64], cfg: &StudyConfig, base_seed: u64) -> Result<StudyReport> {
    cfg.validate()?;
    let (train_s, test_s, _) = split_standardize(series, cfg.train_frac)?;
    let tc = &cfg.train;
    let train_w = WindowSet::new(train_s, tc.p, tc.horizon)?;
    let test_w = WindowSet::new(test_s, tc.p, tc.horizon)?;
    let largest = *cfg.n_train_grid.iter().max().expect("validated nonempty");
    if train_w.len() < largest {
        return Err(Error::TooFewSamples {
            need: largest,
            got: train_w.len(),
        });
    }
    let mut grid = cfg.n_train_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let jobs: Vec<(usize, usize, Strategy)> = grid
        .iter()
        .flat_map(|&n| {
            (0..cfg.n_seeds).flat_map(move |s| [(n, s, Strategy::Recursive), (n, s, Strategy::Direct)])
        })
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(n, s, strategy)| {
            let run_cfg = TrainConfig {
                n_train: n,
                seed: run_seed(base_seed, n, s),
                ..tc.clone()
            };
            (run_cfg.seed, n, strategy, train(&train_w, &test_w, &run_cfg, strategy))
        })
        .collect();
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (seed, n_train, strategy, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e @ Error::Diverged { .. }) => failed.push(FailedRun {
                strategy,
                n_train,
                seed,
                error: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if failed.len() as f64 > MAX_FAILURE_FRACTION * jobs.len() as f64 {
        return Err(Error::Degenerate(format!(
            "{} of {} training runs diverged",
            failed.len(),
            jobs.len()
        )));
    }
    let ratios = ratio_report(&records)?;
    Ok(StudyReport {
        config: cfg.clone(),
        base_seed,
        n_series: series.len(),
        n_train_windows: train_w.len(),
        n_test_windows: test_w.len(),
        records,
        failed,
        ratios,
    })
}

pub const RUNS_HEADER: [&str; 5] = ["strategy", "n_train", "seed", "train_mse", "test_mse"];
pub const RATIOS_HEADER: [&str; 12] = [
    "n_train",
    "n_seeds_rec",
    "n_seeds_dir",
    "mean_train_rec",
    "mean_train_dir",
    "mean_test_rec",
    "mean_test_dir",
    "var_test_rec",
    "var_test_dir",
    "rho_mse_train",
    "rho_mse_test",
    "rho_var",
];

fn f(v: f64) -> String {
    format!("{v:.17e}")
}

/// Writes `runs.csv`, `ratios.csv`, `curves/<key>.csv` and `summary.json`.
pub fn write_outputs(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let curves = dir.join("curves");
    fs::create_dir_all(&curves)?;
    let runs = dir.join("runs.csv");
    let ratios = dir.join("ratios.csv");
    let summary = dir.join("summary.json");
    write_table(
        fs::File::create(&runs)?,
        &RUNS_HEADER,
        report.records.iter().map(|r| {
            vec![
                r.strategy.name().to_string(),
                r.n_train.to_string(),
                r.seed.to_string(),
                f(r.train_mse),
                f(r.test_mse),
            ]
        }),
    )?;
    write_table(
        fs::File::create(&ratios)?,
        &RATIOS_HEADER,
        report.ratios.rows.iter().map(|r| {
            vec![
                r.n_train.to_string(),
                r.n_seeds_rec.to_string(),
                r.n_seeds_dir.to_string(),
                f(r.mean_train_rec),
                f(r.mean_train_dir),
                f(r.mean_test_rec),
                f(r.mean_test_dir),
                f(r.var_test_rec),
                f(r.var_test_dir),
                f(r.rho_mse_train),
                f(r.rho_mse_test),
                f(r.rho_var),
            ]
        }),
    )?;
    let mut paths = vec![runs, ratios];
    for r in &report.records {
        let path = curves.join(format!("{}.csv", r.key()));
        write_table(
            fs::File::create(&path)?,
            &["epoch", "train_mse", "test_mse"],
            r.curve
                .iter()
                .map(|c| vec![c.epoch.to_string(), f(c.train_mse), f(c.test_mse)]),
        )?;
        paths.push(path);
    }
    let js = serde_json::json!({
        "config": report.config,
        "base_seed": report.base_seed,
        "n_series": report.n_series,
        "n_train_windows": report.n_train_windows,
        "n_test_windows": report.n_test_windows,
        "n_runs": report.records.len(),
        "failed": report.failed,
        "ratios": report.ratios,
        "plateau_fraction_largest_n": report.plateau_fraction(),
    });
    let mut out = std::io::BufWriter::new(fs::File::create(&summary)?);
    serde_json::to_writer_pretty(&mut out, &js).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    paths.push(summary);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate_ar2, Ar2Params};
    use crate::evtheory::aleatoric_floor;

    fn record(strategy: Strategy, n: usize, seed: u64, train_mse: f64, test_mse: f64) -> RunRecord {
        RunRecord {
            strategy,
            n_train: n,
            seed,
            train_mse,
            test_mse,
            curve: Vec::new(),
        }
    }

    fn small_sets(seed: u64, p: usize) -> (WindowSet, WindowSet) {
        let params = Ar2Params::new(0.5, 0.2, 0.3, 0.1);
        let s = simulate_ar2(params, 600, 200, seed).unwrap().observed;
        let (tr, te, _) = split_standardize(&s, 0.6).unwrap();
        (WindowSet::new(tr, p, 2).unwrap(), WindowSet::new(te, p, 2).unwrap())
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            p: 4,
            epochs: 5,
            n_train: 300,
            batch_size: 64,
            full_batch_below: 128,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_keeps_initial_state() {
        let (tr, te) = small_sets(1, 4);
        let cfg = TrainConfig { lr: 0.0, ..small_cfg() };
        for s in [Strategy::Recursive, Strategy::Direct] {
            let (rec, params) = train_with_params(&tr, &te, &cfg, s).unwrap();
            let (i, h, o) = network_shape(s, 4, 2, 2);
            let init = MlpParams::init(i, h, o, &mut rng_from_seed(cfg.seed));
            assert_eq!(params, init);
            assert!(rec.curve.iter().all(|c| c.train_mse == rec.curve[0].train_mse));
        }
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let (tr, te) = small_sets(2, 4);
        let cfg = small_cfg();
        for s in [Strategy::Recursive, Strategy::Direct] {
            let a = train(&tr, &te, &cfg, s).unwrap();
            let b = train(&tr, &te, &cfg, s).unwrap();
            assert_eq!(a, b);
            assert!(a.train_mse < a.curve[0].train_mse);
            assert_eq!(a.curve.len(), cfg.epochs + 1);
        }
    }

    #[test]
    fn too_few_windows_rejected() {
        let (tr, te) = small_sets(3, 4);
        let cfg = TrainConfig { n_train: 10_000, ..small_cfg() };
        assert!(matches!(
            train(&tr, &te, &cfg, Strategy::Direct),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn direct_net_reaches_two_step_floor_on_ar2() {
        let params = Ar2Params::new(0.5, 0.2, 1.0, 0.0);
        let s = simulate_ar2(params, 40_000, 500, 11).unwrap().observed;
        let (tr, te) = (s[..30_000].to_vec(), s[30_000..].to_vec());
        let (tr, te) = (WindowSet::new(tr, 2, 2).unwrap(), WindowSet::new(te, 2, 2).unwrap());
        let cfg = TrainConfig {
            p: 2,
            epochs: 30,
            lr: 1e-2,
            n_train: 20_000,
            ..TrainConfig::default()
        };
        let rec = train(&tr, &te, &cfg, Strategy::Direct).unwrap();
        let floor = aleatoric_floor(&params, 2).unwrap();
        assert!(rec.test_mse < 1.2 * floor, "test {} floor {floor}", rec.test_mse);
    }

    #[test]
    fn ratio_examples() {
        let same = vec![
            record(Strategy::Recursive, 10, 0, 1.0, 2.0),
            record(Strategy::Recursive, 10, 1, 3.0, 5.0),
            record(Strategy::Direct, 10, 0, 1.0, 2.0),
            record(Strategy::Direct, 10, 1, 3.0, 5.0),
        ];
        let r = ratio_report(&same).unwrap();
        let row = r.row(10).unwrap();
        assert_eq!((row.rho_mse_train, row.rho_mse_test, row.rho_var), (1.0, 1.0, 1.0));

        let half = vec![
            record(Strategy::Recursive, 10, 0, 1.0, 1.0),
            record(Strategy::Recursive, 10, 1, 1.0, 1.0),
            record(Strategy::Direct, 10, 0, 2.0, 2.0),
            record(Strategy::Direct, 10, 1, 2.0, 2.0),
        ];
        let row = ratio_report(&half).unwrap().rows[0].clone();
        assert_eq!(row.rho_mse_test, 0.5);
        assert_eq!(row.rho_mse_train, 0.5);
        assert_eq!(row.rho_var, 1.0);
    }

    #[test]
    fn ratio_requires_both_strategies() {
        let only = vec![record(Strategy::Recursive, 10, 0, 1.0, 1.0)];
        assert!(matches!(ratio_report(&only), Err(Error::Data(_))));
    }

    #[test]
    fn ratio_ignores_record_order() {
        let mut recs: Vec<RunRecord> = (0..7)
            .flat_map(|s| {
                let x = 0.1 + 0.37 * s as f64;
                [
                    record(Strategy::Recursive, 5, s, x, x * x + 0.3),
                    record(Strategy::Direct, 5, s, 1.0 / (1.0 + x), 0.7 + x.sin()),
                ]
            })
            .collect();
        let base = ratio_report(&recs).unwrap();
        recs.reverse();
        recs.swap(0, 5);
        recs.swap(2, 9);
        assert_eq!(ratio_report(&recs).unwrap(), base);
    }

    #[test]
    fn plateau_examples() {
        let flat: Vec<f64> = (0..=100).map(|i| 1.0 + 1.0 / (1.0 + i as f64)).collect();
        assert!(plateau(&flat, 0.2, 0.01));
        let falling: Vec<f64> = (0..=100).map(|i| (-0.05 * i as f64).exp()).collect();
        assert!(!plateau(&falling, 0.2, 0.01));
        assert!(!plateau(&[1.0], 0.2, 0.01));
    }

    #[test]
    fn study_runs_and_writes_outputs() {
        let params = Ar2Params::new(0.5, 0.2, 0.3, 0.1);
        let s = simulate_ar2(params, 800, 200, 5).unwrap().observed;
        let cfg = StudyConfig {
            n_train_grid: vec![64, 128],
            n_seeds: 3,
            train: TrainConfig {
                p: 4,
                epochs: 3,
                ..TrainConfig::default()
            },
            ..StudyConfig::default()
        };
        let a = run_study(&s, &cfg, 9).unwrap();
        let b = run_study(&s, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 12);
        assert_eq!(a.ratios.rows.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&a, dir.path()).unwrap();
        let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs.lines().count(), 13);
        assert_eq!(fs::read_dir(dir.path().join("curves")).unwrap().count(), 12);
    }
}
