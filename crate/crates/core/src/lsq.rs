//! Levenberg–Marquardt for small dense nonlinear least-squares problems.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when `||J^T r||_inf` falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step is shorter than `step_tol * (1 + ||x||)`.
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-6,
            step_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// `||r(x)||^2`.
    pub cost: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `||r(x)||^2` where `f(x)` returns `(r(x), dr/dx)`.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> LmResult
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut r, mut j) = f(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = j.transpose() * &r;

    while iterations < opts.max_iter {
        if grad.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let jtj = j.transpose() * &j;
        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let (rc, jc) = f(&cand);
            let cc = rc.norm_squared();
            if cc.is_finite() && cc <= cost {
                let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                small_step = delta.norm() < opts.step_tol * (1.0 + xnorm);
                x = cand;
                r = rc;
                j = jc;
                cost = cc;
                grad = j.transpose() * &r;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted || small_step {
            converged = grad.amax() < opts.grad_tol || small_step;
            break;
        }
    }
    if !converged {
        converged = grad.amax() < opts.grad_tol;
    }
    LmResult {
        x,
        cost,
        grad_norm: grad.amax(),
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let r = DVector::from_row_slice(&[10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
            let j = DMatrix::from_row_slice(2, 2, &[-20.0 * x[0], 10.0, -1.0, 0.0]);
            (r, j)
        };
        let res = levenberg_marquardt(f, &[-1.2, 1.0], &LmOptions::default());
        assert!(res.converged && res.grad_norm < 1e-6);
        assert!((res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5);
        let tight = LmOptions {
            grad_tol: 1e-13,
            ..LmOptions::default()
        };
        let res = levenberg_marquardt(f, &[-1.2, 1.0], &tight);
        assert!((res.x[0] - 1.0).abs() < 1e-10 && (res.x[1] - 1.0).abs() < 1e-10);
        assert!(res.cost < 1e-20);
    }

    #[test]
    fn linear_problem_solved_exactly() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[1.0, 2.0, 4.0]);
        let f = |x: &[f64]| (&a * DVector::from_row_slice(x) - &b, a.clone());
        let res = levenberg_marquardt(f, &[0.0, 0.0], &LmOptions::default());
        let exact = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * &b;
        assert!((res.x[0] - exact[0]).abs() < 1e-7 && (res.x[1] - exact[1]).abs() < 1e-7);
        assert!(res.converged);
    }

    #[test]
    fn starts_at_minimum() {
        let f = |x: &[f64]| (DVector::from_row_slice(&[x[0]]), DMatrix::from_element(1, 1, 1.0));
        let res = levenberg_marquardt(f, &[0.0], &LmOptions::default());
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
    }
}
