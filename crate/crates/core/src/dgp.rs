//! Synthetic data: a latent AR(2) process observed through additive
//! Gaussian noise, and the six-term polynomial task sampler.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{rng_from_seed, Rng};

pub const DEFAULT_BURN_IN: usize = 500;

/// `x_t = a x_{t-1} + gamma x_{t-2} + w_t`, `y_t = x_t + v_t`, with
/// `w_t ~ N(0, sigma_s^2)` and `v_t ~ N(0, sigma_e^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar2Params {
    pub a: f64,
    pub gamma: f64,
    pub sigma_s: f64,
    pub sigma_e: f64,
}

impl Ar2Params {
    pub fn new(a: f64, gamma: f64, sigma_s: f64, sigma_e: f64) -> Self {
        Ar2Params {
            a,
            gamma,
            sigma_s,
            sigma_e,
        }
    }

    pub fn is_stable(&self) -> bool {
        is_stable(self.a, self.gamma)
    }

    /// True one-step coefficients `(a, gamma)`.
    pub fn one_step(&self) -> [f64; 2] {
        [self.a, self.gamma]
    }

    fn validate_noise(&self) -> Result<()> {
        if !(self.sigma_s >= 0.0 && self.sigma_e >= 0.0) {
            return Err(Error::invalid(format!(
                "noise standard deviations must be >= 0 (sigma_s={}, sigma_e={})",
                self.sigma_s, self.sigma_e
            )));
        }
        Ok(())
    }
}

/// The AR(2) stationarity triangle.
pub fn is_stable(a: f64, gamma: f64) -> bool {
    a + gamma < 1.0 && gamma - a < 1.0 && gamma.abs() < 1.0
}

/// A simulated latent path and its noisy observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub latent: Vec<f64>,
    pub observed: Vec<f64>,
    pub seed: u64,
    pub params: Ar2Params,
}

impl SeriesPair {
    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    /// CSV with header `t,x,y`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "x", "y"])?;
        for (t, (x, y)) in self.latent.iter().zip(&self.observed).enumerate() {
            w.write_record([t.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates `n` observations after discarding `burn_in` samples from a
/// zero initial state. Rejects parameters outside the stationarity triangle.
pub fn simulate_ar2(params: Ar2Params, n: usize, burn_in: usize, seed: u64) -> Result<SeriesPair> {
    if !params.is_stable() {
        return Err(Error::invalid(format!(
            "AR(2) parameters (a={}, gamma={}) are outside the stationarity region",
            params.a, params.gamma
        )));
    }
    simulate_ar2_unchecked(params, n, burn_in, seed)
}

/// Same as [`simulate_ar2`] without the stationarity check.
///
/// All process-noise draws come before all measurement-noise draws, so two
/// configurations that differ only in `sigma_e` share the same latent path
/// for a given seed.
pub fn simulate_ar2_unchecked(
    params: Ar2Params,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SeriesPair> {
    if n < 3 {
        return Err(Error::invalid(format!("series length must be >= 3, got {n}")));
    }
    params.validate_noise()?;
    let mut rng = rng_from_seed(seed);
    let total = n + burn_in;
    let mut latent = Vec::with_capacity(n);
    let (mut x1, mut x2) = (0.0f64, 0.0f64);
    for t in 0..total {
        let w: f64 = rng.sample(StandardNormal);
        let x = params.a * x1 + params.gamma * x2 + params.sigma_s * w;
        x2 = x1;
        x1 = x;
        if t >= burn_in {
            latent.push(x);
        }
    }
    let observed = latent
        .iter()
        .map(|&x| {
            let v: f64 = rng.sample(StandardNormal);
            x + params.sigma_e * v
        })
        .collect();
    Ok(SeriesPair {
        latent,
        observed,
        seed,
        params,
    })
}

/// Number of task-space coordinates.
pub const TASK_DIM: usize = 6;

/// Coefficients on `psi = [y_t, y_{t-1}, y_t y_{t-1}, y_t^2, y_t^2 y_{t-1}, y_{t-1}^2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskTheta {
    pub theta: [f64; TASK_DIM],
}

impl TaskTheta {
    pub fn new(theta: [f64; TASK_DIM]) -> Self {
        TaskTheta { theta }
    }

    pub fn predict(&self, y_t: f64, y_tm1: f64) -> f64 {
        psi(y_t, y_tm1)
            .iter()
            .zip(&self.theta)
            .map(|(f, c)| f * c)
            .sum()
    }
}

/// The six-term polynomial basis of the task space.
pub fn psi(y_t: f64, y_tm1: f64) -> [f64; TASK_DIM] {
    [
        y_t,
        y_tm1,
        y_t * y_tm1,
        y_t * y_t,
        y_t * y_t * y_tm1,
        y_tm1 * y_tm1,
    ]
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub(crate) fn sample(&self, rng: &mut Rng) -> f64 {
        let u: f64 = rng.gen();
        self.lo + (self.hi - self.lo) * u
    }
}

/// Draws a task uniformly from the box `bounds`.
pub fn sample_task(bounds: &[Interval], seed: u64) -> Result<TaskTheta> {
    let mut rng = rng_from_seed(seed);
    sample_task_with(bounds, &mut rng)
}

pub(crate) fn sample_task_with(bounds: &[Interval], rng: &mut Rng) -> Result<TaskTheta> {
    if bounds.len() != TASK_DIM {
        return Err(Error::Shape {
            what: "task bounds",
            expected: TASK_DIM,
            got: bounds.len(),
        });
    }
    if let Some((i, iv)) = bounds
        .iter()
        .enumerate()
        .find(|(_, iv)| !(iv.lo <= iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite())
    {
        return Err(Error::invalid(format!(
            "task bound {i} is empty or non-finite: [{}, {}]",
            iv.lo, iv.hi
        )));
    }
    let mut theta = [0.0; TASK_DIM];
    for (t, iv) in theta.iter_mut().zip(bounds) {
        *t = iv.sample(rng);
    }
    Ok(TaskTheta { theta })
}

/// Input pairs `(y_t, y_{t-1})` and two-step targets for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub inputs: Vec<[f64; 2]>,
    pub targets: Vec<f64>,
}

impl TaskData {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Inputs i.i.d. `N(0, input_std^2)`, targets `theta . psi + N(0, noise_std^2)`.
pub fn generate_task_data(
    theta: &TaskTheta,
    n_pairs: usize,
    input_std: f64,
    noise_std: f64,
    seed: u64,
) -> Result<TaskData> {
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be >= 1"));
    }
    if !(input_std >= 0.0 && noise_std >= 0.0) {
        return Err(Error::invalid("standard deviations must be >= 0"));
    }
    let mut rng = rng_from_seed(seed);
    let mut inputs = Vec::with_capacity(n_pairs);
    let mut targets = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let y0: f64 = input_std * rng.sample::<f64, _>(StandardNormal);
        let y1: f64 = input_std * rng.sample::<f64, _>(StandardNormal);
        let eps: f64 = rng.sample(StandardNormal);
        inputs.push([y0, y1]);
        targets.push(theta.predict(y0, y1) + noise_std * eps);
    }
    Ok(TaskData { inputs, targets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, pearson, sample_variance};

    #[test]
    fn stability_examples() {
        assert!(is_stable(0.0, 0.0));
        assert!(!is_stable(0.5, 0.6));
        assert!(is_stable(0.9, 0.0));
        assert!(!is_stable(0.0, 1.0));
        assert!(!is_stable(-0.5, 0.6));
    }

    #[test]
    fn noiseless_is_zero() {
        let s = simulate_ar2(Ar2Params::new(0.5, 0.2, 0.0, 0.0), 100, 10, 1).unwrap();
        assert!(s.latent.iter().chain(&s.observed).all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_variance() {
        let s = simulate_ar2(Ar2Params::new(0.0, 0.0, 1.0, 0.0), 100_000, 500, 11).unwrap();
        let v = sample_variance(&s.observed);
        assert!((v - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn determinism_and_validation() {
        let p = Ar2Params::new(0.5, 0.2, 1.0, 0.3);
        assert_eq!(
            simulate_ar2(p, 50, 5, 9).unwrap(),
            simulate_ar2(p, 50, 5, 9).unwrap()
        );
        assert!(simulate_ar2(Ar2Params::new(0.5, 0.6, 1.0, 0.0), 50, 5, 9).is_err());
        assert!(simulate_ar2_unchecked(Ar2Params::new(0.5, 0.6, 1.0, 0.0), 50, 5, 9).is_ok());
        assert!(simulate_ar2(p, 2, 5, 9).is_err());
        assert!(simulate_ar2(Ar2Params::new(0.1, 0.1, -1.0, 0.0), 50, 5, 9).is_err());
    }

    #[test]
    fn lag1_autocorrelation_matches_yule_walker() {
        let (a, g) = (0.5, 0.2);
        let n = 100_000;
        let s = simulate_ar2(Ar2Params::new(a, g, 1.0, 0.0), n, 500, 5).unwrap();
        let r1 = pearson(&s.latent[1..], &s.latent[..n - 1]).unwrap();
        let expected = a / (1.0 - g);
        // Bartlett's large-sample variance of the lag-1 sample autocorrelation.
        let mut rho = vec![1.0, expected];
        for k in 2..200 {
            rho.push(a * rho[k - 1] + g * rho[k - 2]);
        }
        let var: f64 = (1..198)
            .map(|k| (rho[k + 1] + rho[k - 1] - 2.0 * expected * rho[k]).powi(2))
            .sum::<f64>()
            / n as f64;
        let se = var.sqrt();
        assert!((r1 - expected).abs() < 3.0 * se, "r1={r1} expected={expected}");
    }

    #[test]
    fn measurement_noise_is_independent_of_latent() {
        let s = simulate_ar2(Ar2Params::new(0.6, -0.3, 1.0, 0.8), 100_000, 500, 21).unwrap();
        let noise: Vec<f64> = s.observed.iter().zip(&s.latent).map(|(y, x)| y - x).collect();
        assert!(pearson(&noise, &s.latent).unwrap().abs() < 0.02);
        assert!((sample_variance(&noise) - 0.64).abs() < 0.02);
    }

    #[test]
    fn task_sampling() {
        let point = [Interval::new(0.25, 0.25); 6];
        assert_eq!(sample_task(&point, 3).unwrap().theta, [0.25; 6]);

        let bounds: Vec<Interval> = (0..6)
            .map(|i| Interval::new(-1.0 - i as f64, 2.0 + 0.5 * i as f64))
            .collect();
        let mut rng = rng_from_seed(4);
        let draws: Vec<TaskTheta> = (0..10_000)
            .map(|_| sample_task_with(&bounds, &mut rng).unwrap())
            .collect();
        for (k, iv) in bounds.iter().enumerate() {
            let col: Vec<f64> = draws.iter().map(|t| t.theta[k]).collect();
            assert!(col.iter().all(|&x| iv.contains(x)));
            let se = (iv.hi - iv.lo) / 12f64.sqrt() / (col.len() as f64).sqrt();
            assert!((mean(&col) - iv.midpoint()).abs() < 3.0 * se);
        }

        let mut bad = bounds.clone();
        bad[2] = Interval::new(1.0, 0.0);
        assert!(sample_task(&bad, 1).is_err());
        assert!(sample_task(&bounds[..5], 1).is_err());
    }

    #[test]
    fn task_targets() {
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        assert_eq!(TaskTheta::new(e1).predict(2.0, 3.0), 2.0);
        let mut e6 = [0.0; 6];
        e6[5] = 1.0;
        assert_eq!(TaskTheta::new(e6).predict(2.0, 3.0), 9.0);

        let zero = generate_task_data(&TaskTheta::new([0.0; 6]), 50, 1.0, 0.0, 2).unwrap();
        assert!(zero.targets.iter().all(|&t| t == 0.0));

        let d = generate_task_data(&TaskTheta::new(e6), 20, 1.0, 0.0, 2).unwrap();
        for (x, t) in d.inputs.iter().zip(&d.targets) {
            assert_eq!(*t, x[1] * x[1]);
        }
        assert!(generate_task_data(&TaskTheta::new(e6), 0, 1.0, 0.0, 2).is_err());
    }
}
