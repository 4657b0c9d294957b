use std::cmp::Ordering;
use std::fmt;

/// A product of lag variables, `y_t^{e_0} * y_{t-1}^{e_1} * ...`.
///
/// Stored sparsely as `(lag, power)` pairs sorted by lag with no zero
/// powers, so structurally equal monomials compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<(usize, u32)>,
}

impl Monomial {
    /// The constant monomial `1`.
    pub fn one() -> Self {
        Monomial { exps: Vec::new() }
    }

    pub fn var(lag: usize) -> Self {
        Monomial {
            exps: vec![(lag, 1)],
        }
    }

    /// Builds a monomial from `(lag, power)` pairs. Repeated lags are
    /// multiplied together and zero powers dropped.
    pub fn new(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut exps: Vec<(usize, u32)> = Vec::new();
        for (lag, pow) in pairs {
            if pow == 0 {
                continue;
            }
            match exps.iter_mut().find(|(l, _)| *l == lag) {
                Some(entry) => entry.1 += pow,
                None => exps.push((lag, pow)),
            }
        }
        exps.sort_unstable_by_key(|&(l, _)| l);
        Monomial { exps }
    }

    /// From a dense exponent vector indexed by lag.
    pub fn from_dense(exps: &[u32]) -> Self {
        Monomial::new(exps.iter().enumerate().map(|(l, &e)| (l, e)))
    }

    pub fn exponents(&self) -> &[(usize, u32)] {
        &self.exps
    }

    pub fn exponent(&self, lag: usize) -> u32 {
        self.exps
            .iter()
            .find(|(l, _)| *l == lag)
            .map_or(0, |&(_, e)| e)
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn max_lag(&self) -> Option<usize> {
        self.exps.last().map(|&(l, _)| l)
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::new(self.exps.iter().chain(other.exps.iter()).copied())
    }

    /// Evaluates the monomial on a lag window (`window[0] = y_t`).
    /// The caller guarantees every lag is in range.
    pub fn eval(&self, window: &[f64]) -> f64 {
        self.exps
            .iter()
            .map(|&(lag, e)| window[lag].powi(e as i32))
            .product()
    }
}

/// Graded lexicographic order: lower total degree first; within a degree,
/// a larger power on `y_t` comes first, then on `y_{t-1}`, and so on.
/// Linear lags therefore sort as `y_t, y_{t-1}, ..., y_{t-p+1}`.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let max = self
                .max_lag()
                .unwrap_or(0)
                .max(other.max_lag().unwrap_or(0));
            for lag in 0..=max {
                match other.exponent(lag).cmp(&self.exponent(lag)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn lag_name(lag: usize) -> String {
    if lag == 0 {
        "y_t".to_string()
    } else {
        format!("y_{{t-{lag}}}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .exps
            .iter()
            .map(|&(lag, e)| {
                if e == 1 {
                    lag_name(lag)
                } else {
                    format!("{}^{e}", lag_name(lag))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_canonicalizes() {
        let m = Monomial::new([(1, 1), (0, 2), (1, 0), (0, 1)]);
        assert_eq!(m.exponents(), &[(0, 3), (1, 1)]);
        assert_eq!(m, Monomial::from_dense(&[3, 1, 0]));
        assert_eq!(m.degree(), 4);
    }

    #[test]
    fn graded_lex_order() {
        let y0 = Monomial::var(0);
        let y1 = Monomial::var(1);
        let y0y1 = y0.mul(&y1);
        let y0sq = y0.mul(&y0);
        let y1sq = y1.mul(&y1);
        let mut v = vec![y1sq.clone(), y0y1.clone(), y1.clone(), y0sq.clone(), y0.clone()];
        v.sort();
        assert_eq!(v, vec![y0, y1, y0sq, y0y1, y1sq]);
        assert!(Monomial::one() < Monomial::var(5));
    }

    #[test]
    fn eval_and_display() {
        let m = Monomial::new([(0, 2), (1, 1)]);
        assert_eq!(m.eval(&[2.0, 3.0]), 12.0);
        assert_eq!(m.to_string(), "y_t^2 y_{t-1}");
        assert_eq!(Monomial::one().eval(&[]), 1.0);
    }
}
