//! Closed-form aleatoric floors of the latent AR(2) and delta-method
//! estimation-variance traces.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dgp::Ar2Params;
use crate::error::{Error, Result};
use crate::estimate::{symmetrize, MomentMatrix, ParamCov};

/// Irreducible mean-squared error of the oracle linear predictor on the
/// observed series at horizon `h`.
pub fn aleatoric_floor(params: &Ar2Params, h: usize) -> Result<f64> {
    let Ar2Params {
        a,
        gamma,
        sigma_s,
        sigma_e,
    } = *params;
    let s2 = sigma_s * sigma_s;
    let e2 = sigma_e * sigma_e;
    match h {
        1 => Ok(s2 + (1.0 + a * a + gamma * gamma) * e2),
        2 => {
            let c1 = a * a + gamma;
            let c2 = a * gamma;
            Ok((1.0 + a * a) * s2 + (1.0 + c1 * c1 + c2 * c2) * e2)
        }
        other => Err(Error::UnsupportedHorizon(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AleatoricFloors {
    pub sigma2_eps1: f64,
    pub sigma2_eps2: f64,
    pub params: Ar2Params,
}

impl AleatoricFloors {
    pub fn new(params: Ar2Params) -> Self {
        Self {
            sigma2_eps1: aleatoric_floor(&params, 1).expect("h=1 supported"),
            sigma2_eps2: aleatoric_floor(&params, 2).expect("h=2 supported"),
            params,
        }
    }

    pub fn at(&self, h: usize) -> Result<f64> {
        match h {
            1 => Ok(self.sigma2_eps1),
            2 => Ok(self.sigma2_eps2),
            other => Err(Error::UnsupportedHorizon(other)),
        }
    }

    /// Whether the two-step floor is strictly below the one-step floor.
    pub fn favours_recursive(&self) -> bool {
        self.sigma2_eps1 < self.sigma2_eps2
    }
}

fn check_square(what: &'static str, m: &DMatrix<f64>, d: usize) -> Result<()> {
    if m.nrows() != d {
        return Err(Error::Shape {
            what,
            expected: d,
            got: m.nrows(),
        });
    }
    if m.ncols() != d {
        return Err(Error::Shape {
            what,
            expected: d,
            got: m.ncols(),
        });
    }
    Ok(())
}

/// `tr(J Sigma J^T Q~)`.
pub fn ev_recursive(j: &DMatrix<f64>, sigma_theta: &ParamCov, q_tilde: &MomentMatrix) -> Result<f64> {
    let (m, k) = j.shape();
    check_square("parameter covariance", &sigma_theta.sigma, k)?;
    check_square("composed moment matrix", &q_tilde.m, m)?;
    let s = symmetrize(&sigma_theta.sigma);
    let alpha_cov = symmetrize(&(j * s * j.transpose()));
    Ok(trace_product(&alpha_cov, &symmetrize(&q_tilde.m)))
}

/// `tr(Sigma Q)`; with the one-step covariance this is `EV_1`.
pub fn ev_direct(sigma_theta_h: &ParamCov, q: &MomentMatrix) -> Result<f64> {
    let d = sigma_theta_h.dim();
    check_square("parameter covariance", &sigma_theta_h.sigma, d)?;
    check_square("moment matrix", &q.m, d)?;
    Ok(trace_product(
        &symmetrize(&sigma_theta_h.sigma),
        &symmetrize(&q.m),
    ))
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// `T_h = tr(J Sigma J^T Q~) / tr(Sigma Q)`.
pub fn amplification(
    j: &DMatrix<f64>,
    sigma_theta: &ParamCov,
    q_tilde: &MomentMatrix,
    q: &MomentMatrix,
) -> Result<f64> {
    let num = ev_recursive(j, sigma_theta, q_tilde)?;
    let den = ev_direct(sigma_theta, q)?;
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "one-step estimation variance is {den}; amplification undefined"
        )));
    }
    Ok(num / den)
}

pub fn ev_delta(ev_rec: f64, ev_dir: f64) -> f64 {
    ev_rec - ev_dir
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvReport {
    pub horizon: usize,
    pub ev_rec: f64,
    pub ev_dir: f64,
    pub ev_one_step: f64,
    /// NaN when `ev_one_step` is not positive.
    pub t_h: f64,
    pub delta_ev: f64,
}

impl EvReport {
    pub fn new(horizon: usize, ev_rec: f64, ev_dir: f64, ev_one_step: f64) -> Self {
        let t_h = if ev_one_step > 0.0 {
            ev_rec / ev_one_step
        } else {
            f64::NAN
        };
        Self {
            horizon,
            ev_rec,
            ev_dir,
            ev_one_step,
            t_h,
            delta_ev: ev_delta(ev_rec, ev_dir),
        }
    }

    /// Builds a report from the one-step covariance, the direct `h`-step
    /// covariance and the moment matrices.
    pub fn compute(
        horizon: usize,
        j: &DMatrix<f64>,
        sigma_one: &ParamCov,
        sigma_direct: &ParamCov,
        q_tilde: &MomentMatrix,
        q: &MomentMatrix,
    ) -> Result<Self> {
        let ev_rec = ev_recursive(j, sigma_one, q_tilde)?;
        let ev_dir = ev_direct(sigma_direct, q)?;
        let ev_one_step = ev_direct(sigma_one, q)?;
        Ok(Self::new(horizon, ev_rec, ev_dir, ev_one_step))
    }

    pub fn identities_hold(&self) -> bool {
        let t_ok = if self.ev_one_step > 0.0 {
            self.t_h == self.ev_rec / self.ev_one_step
        } else {
            self.t_h.is_nan()
        };
        t_ok && self.delta_ev == self.ev_rec - self.ev_dir
    }
}
