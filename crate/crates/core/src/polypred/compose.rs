//! Symbolic h-fold composition of a one-step polynomial predictor.
//!
//! The one-step family `sum_i b_i m_i(y)` is expanded over a joint ring whose
//! variables are the `p` lags followed by the `d` parameters. After `h`
//! substitutions the result is regrouped by lag monomial, giving each
//! composed coefficient `alpha_j` as a polynomial in `b`. All coefficients
//! of those polynomials are non-negative integers, so the expansion is exact
//! in `f64` and only exact zeros are ever pruned.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use super::monomial::Monomial;
use super::predictor::{PolyPredictor, PredictorFamily};
use crate::error::{Error, Result};

type Key = Vec<u32>;

#[derive(Clone, Debug, Default)]
struct JointPoly {
    terms: BTreeMap<Key, f64>,
}

impl JointPoly {
    fn var(nv: usize, idx: usize) -> Self {
        let mut k = vec![0; nv];
        k[idx] = 1;
        JointPoly {
            terms: BTreeMap::from([(k, 1.0)]),
        }
    }

    fn constant(nv: usize, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(vec![0; nv], c);
        }
        JointPoly { terms }
    }

    fn mul(&self, other: &JointPoly) -> JointPoly {
        let mut out: BTreeMap<Key, f64> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k: Key = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                *out.entry(k).or_insert(0.0) += ca * cb;
            }
        }
        out.retain(|_, c| *c != 0.0);
        JointPoly { terms: out }
    }

    fn add_assign(&mut self, other: &JointPoly) {
        for (k, c) in &other.terms {
            *self.terms.entry(k.clone()).or_insert(0.0) += c;
        }
        self.terms.retain(|_, c| *c != 0.0);
    }

    fn pow(&self, nv: usize, e: u32) -> JointPoly {
        let mut acc = JointPoly::constant(nv, 1.0);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

/// A polynomial in the one-step parameters `b_1, ..., b_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoly {
    n_params: usize,
    terms: BTreeMap<Key, f64>,
}

impl ParamPoly {
    fn new(n_params: usize) -> Self {
        ParamPoly {
            n_params,
            terms: BTreeMap::new(),
        }
    }

    /// `(exponents over b, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, b: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                c * k
                    .iter()
                    .zip(b)
                    .map(|(&e, &x)| if e == 0 { 1.0 } else { x.powi(e as i32) })
                    .product::<f64>()
            })
            .sum()
    }

    /// Exact partial derivative with respect to `b_{i+1}`.
    pub fn partial(&self, i: usize) -> ParamPoly {
        let mut out = ParamPoly::new(self.n_params);
        for (k, c) in &self.terms {
            let e = k[i];
            if e == 0 {
                continue;
            }
            let mut dk = k.clone();
            dk[i] -= 1;
            *out.terms.entry(dk).or_insert(0.0) += c * f64::from(e);
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest total degree first reads naturally: b_1^2 + b_2.
        let mut terms: Vec<(&Key, &f64)> = self.terms.iter().collect();
        terms.sort_by(|(ka, _), (kb, _)| {
            let da: u32 = ka.iter().sum();
            let db: u32 = kb.iter().sum();
            db.cmp(&da).then_with(|| kb.cmp(ka))
        });
        for (n, (k, &c)) in terms.into_iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let factors: Vec<String> = k
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("b_{}", i + 1)
                    } else {
                        format!("b_{}^{}", i + 1, e)
                    }
                })
                .collect();
            match (c == 1.0, factors.is_empty()) {
                (_, true) => write!(f, "{c}")?,
                (true, false) => write!(f, "{}", factors.join(" "))?,
                (false, false) => write!(f, "{c} {}", factors.join(" "))?,
            }
        }
        Ok(())
    }
}

/// The parameter-composition map `b -> alpha_h(b)` of a predictor family.
#[derive(Clone, Debug)]
pub struct CompositionMap {
    family: PredictorFamily,
    h: usize,
    entries: Vec<(Monomial, ParamPoly)>,
    jacobian_polys: Vec<Vec<ParamPoly>>,
}

impl CompositionMap {
    pub fn family(&self) -> &PredictorFamily {
        &self.family
    }

    pub fn horizon(&self) -> usize {
        self.h
    }

    pub fn p(&self) -> usize {
        self.family.p()
    }

    pub fn n_params(&self) -> usize {
        self.family.len()
    }

    /// Composed monomials and their parameter polynomials, in graded lex order.
    pub fn entries(&self) -> &[(Monomial, ParamPoly)] {
        &self.entries
    }

    pub fn composed_monomials(&self) -> Vec<Monomial> {
        self.entries.iter().map(|(m, _)| m.clone()).collect()
    }

    fn check_params(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n_params() {
            return Err(Error::Shape {
                what: "one-step parameter vector",
                expected: self.n_params(),
                got: b.len(),
            });
        }
        Ok(())
    }

    /// Composed coefficients `alpha_h(b)` in [`Self::entries`] order.
    pub fn alpha_at(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_params(b)?;
        Ok(self.entries.iter().map(|(_, poly)| poly.eval(b)).collect())
    }

    /// `J[j][i] = d alpha_j / d b_i` at `b`.
    pub fn jacobian_at(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        self.check_params(b)?;
        let rows = self.entries.len();
        let cols = self.n_params();
        Ok(DMatrix::from_fn(rows, cols, |j, i| {
            self.jacobian_polys[j][i].eval(b)
        }))
    }

    /// The effective h-step predictor for concrete one-step parameters.
    pub fn predictor_at(&self, b: &[f64]) -> Result<PolyPredictor> {
        let alpha = self.alpha_at(b)?;
        PolyPredictor::new(
            self.p(),
            self.entries
                .iter()
                .map(|(m, _)| m.clone())
                .zip(alpha),
        )
    }
}

/// Expands the h-fold recursion of `family` symbolically.
///
/// Each step feeds the prediction back as the newest lag and drops the
/// oldest one: the window `(y_t, ..., y_{t-p+1})` becomes
/// `(yhat_{t+1}, y_t, ..., y_{t-p+2})`.
pub fn compose_family(family: &PredictorFamily, h: usize) -> Result<CompositionMap> {
    if h == 0 {
        return Err(Error::invalid("composition horizon must be at least 1"));
    }
    let p = family.p();
    let d = family.len();
    let nv = p + d;

    let step = |window: &[JointPoly]| -> JointPoly {
        let mut out = JointPoly::default();
        for (i, m) in family.monomials().iter().enumerate() {
            let mut term = JointPoly::var(nv, p + i);
            for &(lag, e) in m.exponents() {
                term = term.mul(&window[lag].pow(nv, e));
            }
            out.add_assign(&term);
        }
        out
    };

    let mut window: Vec<JointPoly> = (0..p).map(|l| JointPoly::var(nv, l)).collect();
    let mut pred = step(&window);
    for _ in 1..h {
        if p > 0 {
            window.pop();
            window.insert(0, pred);
        }
        pred = step(&window);
    }

    let mut grouped: BTreeMap<Monomial, ParamPoly> = BTreeMap::new();
    for (k, c) in pred.terms {
        let mono = Monomial::from_dense(&k[..p]);
        let entry = grouped.entry(mono).or_insert_with(|| ParamPoly::new(d));
        *entry.terms.entry(k[p..].to_vec()).or_insert(0.0) += c;
    }
    grouped.retain(|_, poly| {
        poly.terms.retain(|_, c| *c != 0.0);
        !poly.is_zero()
    });
    let entries: Vec<(Monomial, ParamPoly)> = grouped.into_iter().collect();
    let jacobian_polys = entries
        .iter()
        .map(|(_, poly)| (0..d).map(|i| poly.partial(i)).collect())
        .collect();

    Ok(CompositionMap {
        family: family.clone(),
        h,
        entries,
        jacobian_polys,
    })
}

/// A concrete composition: the effective h-step predictor plus the map
/// that produced it.
#[derive(Clone, Debug)]
pub struct CompositionResult {
    pub composed: PolyPredictor,
    pub map: CompositionMap,
    one_step_params: Vec<f64>,
}

impl CompositionResult {
    /// The one-step coefficients the composition was evaluated at.
    pub fn one_step_params(&self) -> &[f64] {
        &self.one_step_params
    }

    pub fn jacobian_at(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        self.map.jacobian_at(b)
    }
}

/// Composes a concrete one-step predictor with itself `h` times.
///
/// The parameters are the predictor's own coefficients in canonical term
/// order. `h = 1` returns the input unchanged.
pub fn compose(one_step: &PolyPredictor, h: usize) -> Result<CompositionResult> {
    let family = one_step.family();
    let map = compose_family(&family, h)?;
    let b = one_step.coefficients();
    let composed = if h == 1 {
        one_step.clone()
    } else {
        map.predictor_at(&b)?
    };
    Ok(CompositionResult {
        composed,
        map,
        one_step_params: b,
    })
}

/// Jacobian of the parameter map of `comp`, evaluated at `b`.
pub fn jacobian(comp: &CompositionResult, b: &[f64]) -> Result<DMatrix<f64>> {
    comp.map.jacobian_at(b)
}
