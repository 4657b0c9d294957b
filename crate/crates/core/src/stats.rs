//! Small descriptive-statistics helpers shared by the experiment modules.

use serde::Serialize;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor n - 1). NaN for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            what: "pearson inputs",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: xs.len(),
        });
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate(
            "correlation undefined for a zero-variance input".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One step of an empirical CDF: `F(x) = fraction` for `x` in `[value, next value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcdfStep {
    pub value: f64,
    pub fraction: f64,
}

/// Right-continuous empirical CDF; one step per distinct value.
pub fn ecdf(values: &[f64]) -> Result<Vec<EcdfStep>> {
    if values.is_empty() {
        return Err(Error::invalid("ecdf of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("ecdf input contains NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut steps: Vec<EcdfStep> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match steps.last_mut() {
            Some(last) if last.value == x => last.fraction = fraction,
            _ => steps.push(EcdfStep { value: x, fraction }),
        }
    }
    Ok(steps)
}

/// Evaluate a step function produced by [`ecdf`] at `x`.
pub fn ecdf_eval(steps: &[EcdfStep], x: f64) -> f64 {
    let idx = steps.partition_point(|s| s.value <= x);
    if idx == 0 {
        0.0
    } else {
        steps[idx - 1].fraction
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use rand::Rng;

    #[test]
    fn pearson_perfect_lines() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_independent_is_small() {
        let mut rng = rng_from_seed(3);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        assert!(pearson(&xs, &ys).unwrap().abs() < 0.05);
    }

    #[test]
    fn pearson_zero_variance_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ecdf_steps() {
        let s = ecdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].value, 1.0);
        assert!((s[0].fraction - 1.0 / 3.0).abs() < 1e-15);
        assert!((s[1].fraction - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s[2].fraction, 1.0);
        assert_eq!(ecdf_eval(&s, 3.0), 1.0);
        assert_eq!(ecdf_eval(&s, 0.5), 0.0);
        assert!((ecdf_eval(&s, 1.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ecdf_all_equal_is_one_step() {
        let s = ecdf(&[2.0; 5]).unwrap();
        assert_eq!(s, vec![EcdfStep { value: 2.0, fraction: 1.0 }]);
        assert!(ecdf(&[]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
