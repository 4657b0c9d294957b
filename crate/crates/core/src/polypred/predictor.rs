use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::monomial::Monomial;
use crate::error::{Error, Result};

/// The set of monomials a predictor family is linear in. Its order is the
/// parameter order used by composition maps and Jacobian columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictorFamily {
    p: usize,
    monomials: Vec<Monomial>,
}

impl PredictorFamily {
    pub fn new(p: usize, monomials: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let mut monomials: Vec<Monomial> = monomials.into_iter().collect();
        monomials.sort();
        monomials.dedup();
        for m in &monomials {
            check_lags(m, p)?;
        }
        Ok(PredictorFamily { p, monomials })
    }

    /// `b_1 y_t + ... + b_p y_{t-p+1}`.
    pub fn linear(p: usize) -> Self {
        PredictorFamily {
            p,
            monomials: (0..p).map(Monomial::var).collect(),
        }
    }

    /// `b_1 y_t + b_2 y_{t-1} + b_3 y_t y_{t-1}`.
    pub fn bilinear() -> Self {
        PredictorFamily::new(
            2,
            [
                Monomial::var(0),
                Monomial::var(1),
                Monomial::new([(0, 1), (1, 1)]),
            ],
        )
        .expect("lags in range")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// A concrete member of the family; exact-zero coefficients are dropped.
    pub fn predictor(&self, coefs: &[f64]) -> Result<PolyPredictor> {
        if coefs.len() != self.monomials.len() {
            return Err(Error::Shape {
                what: "family coefficients",
                expected: self.monomials.len(),
                got: coefs.len(),
            });
        }
        PolyPredictor::new(
            self.p,
            self.monomials.iter().cloned().zip(coefs.iter().copied()),
        )
    }
}

fn check_lags(m: &Monomial, p: usize) -> Result<()> {
    match m.max_lag() {
        Some(l) if l >= p => Err(Error::invalid(format!(
            "monomial {m} uses lag {l} but lag order is {p}"
        ))),
        _ => Ok(()),
    }
}

/// A sparse polynomial predictor over the lag window `(y_t, ..., y_{t-p+1})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PredictorJson", into = "PredictorJson")]
pub struct PolyPredictor {
    p: usize,
    terms: BTreeMap<Monomial, f64>,
    labels: Option<Vec<String>>,
}

impl PolyPredictor {
    /// Collects like terms and drops exact zeros.
    pub fn new(p: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            check_lags(&m, p)?;
            if !c.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient on {m}")));
            }
            *map.entry(m).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(PolyPredictor {
            p,
            terms: map,
            labels: None,
        })
    }

    pub fn zero(p: usize) -> Self {
        PolyPredictor {
            p,
            terms: BTreeMap::new(),
            labels: None,
        }
    }

    /// `coefs[0] y_t + coefs[1] y_{t-1} + ...`, lag order `coefs.len()`.
    pub fn linear(coefs: &[f64]) -> Result<Self> {
        PolyPredictor::new(
            coefs.len(),
            coefs.iter().enumerate().map(|(l, &c)| (Monomial::var(l), c)),
        )
    }

    /// Attaches one label per term, in canonical term order.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.terms.len() {
            return Err(Error::Shape {
                what: "parameter labels",
                expected: self.terms.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, f64> {
        &self.terms
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms.keys().cloned().collect()
    }

    /// Coefficients in canonical (graded lex) term order.
    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.values().copied().collect()
    }

    pub fn family(&self) -> PredictorFamily {
        PredictorFamily {
            p: self.p,
            monomials: self.monomials(),
        }
    }

    pub fn eval(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.p {
            return Err(Error::Shape {
                what: "predictor window",
                expected: self.p,
                got: window.len(),
            });
        }
        Ok(self.terms.iter().map(|(m, c)| c * m.eval(window)).sum())
    }

    /// Applies the predictor `h` times, prepending each prediction to the
    /// window and dropping the oldest lag.
    pub fn iterate(&self, window: &[f64], h: usize) -> Result<f64> {
        if h == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let mut w = window.to_vec();
        let mut out = self.eval(&w)?;
        for _ in 1..h {
            if self.p > 0 {
                w.pop();
                w.insert(0, out);
            }
            out = self.eval(&w)?;
        }
        Ok(out)
    }
}

impl PartialEq for PolyPredictor {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.terms == other.terms
    }
}

impl fmt::Display for PolyPredictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exps: BTreeMap<String, u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PredictorJson {
    p: usize,
    terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<PredictorJson> for PolyPredictor {
    type Error = Error;

    fn try_from(j: PredictorJson) -> Result<Self> {
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            let mut pairs = Vec::with_capacity(t.exps.len());
            for (k, e) in t.exps {
                let lag: usize = k
                    .parse()
                    .map_err(|_| Error::invalid(format!("lag key {k:?} is not an integer")))?;
                pairs.push((lag, e));
            }
            terms.push((Monomial::new(pairs), t.coef));
        }
        let pred = PolyPredictor::new(j.p, terms)?;
        match j.labels {
            Some(labels) => pred.with_labels(labels),
            None => Ok(pred),
        }
    }
}

impl From<PolyPredictor> for PredictorJson {
    fn from(p: PolyPredictor) -> Self {
        PredictorJson {
            p: p.p,
            terms: p
                .terms
                .iter()
                .map(|(m, &coef)| TermJson {
                    exps: m
                        .exponents()
                        .iter()
                        .map(|&(l, e)| (l.to_string(), e))
                        .collect(),
                    coef,
                })
                .collect(),
            labels: p.labels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let lin = PolyPredictor::linear(&[1.0, 1.0]).unwrap();
        assert_eq!(lin.eval(&[2.0, 3.0]).unwrap(), 5.0);
        assert_eq!(PolyPredictor::zero(2).eval(&[2.0, 3.0]).unwrap(), 0.0);
        let cross = PolyPredictor::new(2, [(Monomial::new([(0, 1), (1, 1)]), 1.0)]).unwrap();
        assert_eq!(cross.eval(&[2.0, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn window_length_is_checked() {
        let lin = PolyPredictor::linear(&[1.0, 1.0]).unwrap();
        assert!(matches!(lin.eval(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_coefficients_are_pruned_and_equality_is_canonical() {
        let a = PolyPredictor::new(
            2,
            [
                (Monomial::var(1), 2.0),
                (Monomial::var(0), 1.0),
                (Monomial::var(1), -2.0),
            ],
        )
        .unwrap();
        let b = PolyPredictor::linear(&[1.0, 0.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.terms().len(), 1);
    }

    #[test]
    fn lag_out_of_range_is_rejected() {
        assert!(PolyPredictor::new(2, [(Monomial::var(2), 1.0)]).is_err());
    }

    #[test]
    fn json_shape() {
        let text = r#"{"p": 2, "terms": [{"exps": {"0": 2, "1": 1}, "coef": 0.5}, {"exps": {"0": 1}, "coef": -1.0}]}"#;
        let pred: PolyPredictor = serde_json::from_str(text).unwrap();
        assert_eq!(pred.p(), 2);
        assert_eq!(pred.eval(&[2.0, 3.0]).unwrap(), 0.5 * 12.0 - 2.0);
        let back = serde_json::to_string(&pred).unwrap();
        let again: PolyPredictor = serde_json::from_str(&back).unwrap();
        assert_eq!(pred, again);
    }

    #[test]
    fn iterate_prepends_predictions() {
        // y_{t+1} = y_t + y_{t-1}: Fibonacci-like recursion.
        let f = PolyPredictor::linear(&[1.0, 1.0]).unwrap();
        assert_eq!(f.iterate(&[2.0, 1.0], 1).unwrap(), 3.0);
        assert_eq!(f.iterate(&[2.0, 1.0], 2).unwrap(), 5.0);
        assert_eq!(f.iterate(&[2.0, 1.0], 3).unwrap(), 8.0);
    }
}
