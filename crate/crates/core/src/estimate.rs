//! Lagged design matrices, intercept-free least squares, feature second
//! moments and parameter covariances.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polypred::{CompositionMap, Monomial};

/// Fits whose design has reciprocal condition number below this are refused.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Rows are lag windows `[y_t, ..., y_{t-p+1}]`, newest first; targets are `y_{t+h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub p: usize,
    pub h: usize,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn window(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }
}

pub fn build_design(series: &[f64], p: usize, h: usize) -> Result<DesignMatrix> {
    if p == 0 || h == 0 {
        return Err(Error::invalid("lag order and horizon must be >= 1"));
    }
    if series.len() < p + h {
        return Err(Error::TooFewSamples {
            need: p + h,
            got: series.len(),
        });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("series value at index {i} is not finite")));
    }
    let n = series.len() - p - h + 1;
    let rows = DMatrix::from_fn(n, p, |i, j| series[p - 1 + i - j]);
    let targets = DVector::from_fn(n, |i, _| series[p - 1 + i + h]);
    Ok(DesignMatrix { rows, targets, p, h })
}

/// Least squares for a design, no intercept.
pub fn ols_fit(design: &DesignMatrix) -> Result<DVector<f64>> {
    ols_solve(&design.rows, &design.targets)
}

/// Householder-QR least squares `min ||X beta - y||`. Refuses fits whose
/// reciprocal condition number (from the singular values of `R`) is below
/// [`RCOND_THRESHOLD`].
pub fn ols_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::Shape {
            what: "ols targets",
            expected: n,
            got: y.len(),
        });
    }
    if n < k || k == 0 {
        return Err(Error::TooFewSamples { need: k.max(1), got: n });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let sv = r.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(Error::SingularFit { rcond });
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let top = qty.rows(0, k).into_owned();
    r.solve_upper_triangular(&top)
        .ok_or(Error::SingularFit { rcond })
}

/// In-sample residual mean square, `RSS / (n - k)`.
pub fn residual_mean_square(x: &DMatrix<f64>, y: &DVector<f64>, coef: &DVector<f64>) -> f64 {
    let resid = y - x * coef;
    let dof = x.nrows().saturating_sub(x.ncols()).max(1);
    resid.norm_squared() / dof as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// `Q = E[x x^T]` over base lag features.
    Base,
    /// `Q~ = E[x~ x~^T]` over composed monomial features.
    Composed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub m: DMatrix<f64>,
    pub kind: MomentKind,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Symmetric within 1e-12 (relative to the largest entry) and PSD with
    /// smallest eigenvalue no lower than `-1e-10 * trace`.
    pub fn is_valid(&self) -> bool {
        is_symmetric_psd(&self.m)
    }
}

pub(crate) fn is_symmetric_psd(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    let sym = symmetrize(m);
    let eig = sym.clone().symmetric_eigenvalues();
    eig.min() >= -1e-10 * sym.trace().abs().max(f64::MIN_POSITIVE)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `(1/n) X^T X`.
pub fn second_moment(features: &DMatrix<f64>) -> Result<MomentMatrix> {
    moment_of(features, MomentKind::Base)
}

fn moment_of(features: &DMatrix<f64>, kind: MomentKind) -> Result<MomentMatrix> {
    let n = features.nrows();
    if n == 0 {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let m = symmetrize(&(features.transpose() * features)) / n as f64;
    Ok(MomentMatrix { m, kind })
}

/// Evaluates each monomial on each lag window (one output row per input row).
pub fn composed_features(rows: &DMatrix<f64>, monomials: &[Monomial]) -> DMatrix<f64> {
    let n = rows.nrows();
    DMatrix::from_fn(n, monomials.len(), |i, j| {
        let w: Vec<f64> = rows.row(i).iter().copied().collect();
        monomials[j].eval(&w)
    })
}

/// Second moment of the composed monomial features over the lag windows of
/// `series` that have an `h`-step target (the rows of `build_design(series, p, h)`).
pub fn composed_second_moment(series: &[f64], comp: &CompositionMap) -> Result<MomentMatrix> {
    let design = build_design(series, comp.p(), comp.horizon())?;
    let feats = composed_features(&design.rows, &comp.composed_monomials());
    moment_of(&feats, MomentKind::Composed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticOls,
    Empirical,
}

/// Estimator covariance `Sigma_theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCov {
    pub sigma: DMatrix<f64>,
    pub provenance: Provenance,
    pub n_used: usize,
}

impl ParamCov {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn is_valid(&self) -> bool {
        is_symmetric_psd(&self.sigma)
    }
}

/// Inverse of a symmetric matrix, refusing numerically singular input.
pub(crate) fn checked_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Singular("matrix must be square and non-empty".into()));
    }
    let sv = m.clone().singular_values();
    let rcond = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(Error::Singular(format!("reciprocal condition number {rcond:e}")));
    }
    m.clone()
        .try_inverse()
        .map(|inv| symmetrize(&inv))
        .ok_or_else(|| Error::Singular("inversion failed".into()))
}

/// Well-specified OLS covariance `(sigma2_eps / n) Q^{-1}`.
pub fn ols_param_cov(sigma2_eps: f64, n: usize, q: &MomentMatrix) -> Result<ParamCov> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if !(sigma2_eps >= 0.0) {
        return Err(Error::invalid("residual variance must be >= 0"));
    }
    let inv = checked_inverse(&q.m)?;
    Ok(ParamCov {
        sigma: inv * (sigma2_eps / n as f64),
        provenance: Provenance::AnalyticOls,
        n_used: n,
    })
}

/// Unbiased sample covariance of coefficient vectors (divisor n - 1).
pub fn empirical_param_cov(samples: &[Vec<f64>]) -> Result<ParamCov> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let d = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::Shape {
            what: "coefficient sample",
            expected: d,
            got: bad.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut sigma = DMatrix::zeros(d, d);
    for s in samples {
        for i in 0..d {
            let di = s[i] - mean[i];
            for j in 0..d {
                sigma[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    sigma /= (n - 1) as f64;
    Ok(ParamCov {
        sigma,
        provenance: Provenance::Empirical,
        n_used: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate_ar2, Ar2Params};
    use crate::polypred::{compose_family, PredictorFamily};
    use crate::seeding::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn design_enumeration() {
        let d = build_design(&[1.0, 2.0, 3.0, 4.0], 2, 1).unwrap();
        assert_eq!(d.rows, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 3.0, 2.0]));
        assert_eq!(d.targets.as_slice(), &[3.0, 4.0]);

        let d = build_design(&[1.0, 2.0, 3.0, 4.0, 5.0], 2, 2).unwrap();
        assert_eq!(d.rows, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 3.0, 2.0]));
        assert_eq!(d.targets.as_slice(), &[4.0, 5.0]);

        // p + h - 1 == len leaves no rows
        assert!(build_design(&[1.0, 2.0, 3.0], 2, 2).is_err());
        assert!(build_design(&[1.0, f64::NAN, 3.0, 4.0], 2, 1).is_err());
    }

    #[test]
    fn ols_identity_and_noiseless() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let y = DVector::from_row_slice(&[2.0, 3.0]);
        let b = ols_solve(&x, &y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-14 && (b[1] - 3.0).abs() < 1e-14);

        let mut rng = rng_from_seed(1);
        let x = DMatrix::from_fn(200, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &x * DVector::from_row_slice(&[0.5, 0.2]);
        let b = ols_solve(&x, &y).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-10 && (b[1] - 0.2).abs() < 1e-10);
    }

    #[test]
    fn ols_rejects_collinear_design() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        assert!(matches!(ols_solve(&x, &y), Err(Error::SingularFit { .. })));
        let zero = DMatrix::zeros(5, 2);
        assert!(matches!(
            ols_solve(&zero, &DVector::zeros(5)),
            Err(Error::SingularFit { .. })
        ));
    }

    #[test]
    fn ols_consistency_on_ar2() {
        let s = simulate_ar2(Ar2Params::new(0.5, 0.2, 1.0, 0.0), 100_000, 500, 8).unwrap();
        let b = ols_fit(&build_design(&s.observed, 2, 1).unwrap()).unwrap();
        assert!((b[0] - 0.5).abs() < 0.01 && (b[1] - 0.2).abs() < 0.01, "{b}");
    }

    #[test]
    fn residuals_are_orthogonal_to_columns() {
        let s = simulate_ar2(Ar2Params::new(0.3, -0.4, 1.0, 0.5), 5_000, 500, 2).unwrap();
        let d = build_design(&s.observed, 3, 2).unwrap();
        let b = ols_fit(&d).unwrap();
        let r = &d.targets - &d.rows * &b;
        let xtr = d.rows.transpose() * r;
        assert!(xtr.amax() / d.n() as f64 <= 1e-8);
    }

    #[test]
    fn second_moment_examples() {
        let q = second_moment(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(q.m, DMatrix::identity(2, 2) * 0.5);
        let q = second_moment(&DMatrix::from_row_slice(1, 2, &[2.0, 3.0])).unwrap();
        assert_eq!(q.m, DMatrix::from_row_slice(2, 2, &[4.0, 6.0, 6.0, 9.0]));
        assert!(q.is_valid());

        let mut rng = rng_from_seed(5);
        let x = DMatrix::from_fn(100_000, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = second_moment(&x).unwrap();
        assert!((q.m - DMatrix::identity(3, 3)).amax() < 0.02);
    }

    #[test]
    fn second_moment_is_row_permutation_invariant() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 4.0, 3.0, 1.5]);
        let perm = DMatrix::from_row_slice(3, 2, &[3.0, 1.5, 1.0, -2.0, 0.5, 4.0]);
        let a = second_moment(&x).unwrap().m;
        let b = second_moment(&perm).unwrap().m;
        assert!((a - b).amax() < 1e-14);
    }

    #[test]
    fn composed_moment_identity_and_constant() {
        let series: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let id = compose_family(&PredictorFamily::linear(2), 1).unwrap();
        let qt = composed_second_moment(&series, &id).unwrap();
        let q = second_moment(&build_design(&series, 2, 1).unwrap().rows).unwrap();
        assert_eq!(qt.m, q.m);
        assert_eq!(qt.kind, MomentKind::Composed);

        let c = 1.3;
        let map = compose_family(&PredictorFamily::bilinear(), 2).unwrap();
        let qt = composed_second_moment(&[c; 20], &map).unwrap();
        let monos = map.composed_monomials();
        for (i, mi) in monos.iter().enumerate() {
            for (j, mj) in monos.iter().enumerate() {
                let expected = c.powi((mi.degree() + mj.degree()) as i32);
                assert!((qt.m[(i, j)] - expected).abs() < 1e-12 * expected);
            }
        }
    }

    #[test]
    fn ols_param_cov_scaling() {
        let q = MomentMatrix {
            m: DMatrix::identity(2, 2),
            kind: MomentKind::Base,
        };
        assert_eq!(ols_param_cov(1.0, 1, &q).unwrap().sigma, DMatrix::identity(2, 2));
        let s = ols_param_cov(2.0, 100, &q).unwrap().sigma;
        assert!((s - DMatrix::identity(2, 2) * 0.02).amax() < 1e-16);

        let q2 = MomentMatrix {
            m: DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            kind: MomentKind::Base,
        };
        let a = ols_param_cov(1.5, 400, &q2).unwrap().sigma;
        let b = ols_param_cov(1.5, 800, &q2).unwrap().sigma;
        assert!((a * 0.5 - b).amax() < 1e-18);

        let singular = MomentMatrix {
            m: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            kind: MomentKind::Base,
        };
        assert!(matches!(ols_param_cov(1.0, 10, &singular), Err(Error::Singular(_))));
    }

    #[test]
    fn empirical_cov_examples() {
        let same = vec![vec![1.0, 2.0]; 4];
        assert_eq!(empirical_param_cov(&same).unwrap().sigma, DMatrix::zeros(2, 2));
        let two = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        assert_eq!(
            empirical_param_cov(&two).unwrap().sigma,
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])
        );
        assert!(empirical_param_cov(&[vec![1.0]]).is_err());
    }
}
