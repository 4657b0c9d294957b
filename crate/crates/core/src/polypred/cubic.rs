//! Real roots of the depressed cubic `t^3 + p t + q = 0`.
//!
//! Closed form with a discriminant branch: trigonometric for three real
//! roots, hyperbolic (Cardano) for one, and the double-root formula at a
//! zero discriminant. Every root is then polished with Newton steps until
//! the residual stops improving or drops below `RESIDUAL_TOL`.

use std::f64::consts::PI;

const RESIDUAL_TOL: f64 = 1e-12;
const MAX_POLISH: usize = 8;

fn residual(t: f64, p: f64, q: f64) -> f64 {
    (t * t + p) * t + q
}

fn polish(mut t: f64, p: f64, q: f64) -> f64 {
    let mut r = residual(t, p, q);
    for _ in 0..MAX_POLISH {
        if r.abs() <= RESIDUAL_TOL {
            break;
        }
        let d = 3.0 * t * t + p;
        if d == 0.0 {
            break;
        }
        let next = t - r / d;
        let rn = residual(next, p, q);
        if rn.abs() >= r.abs() {
            break;
        }
        t = next;
        r = rn;
    }
    t
}

/// All distinct real roots, ascending.
pub fn depressed_cubic_real_roots(p: f64, q: f64) -> Vec<f64> {
    let mut roots: Vec<f64> = if p == 0.0 {
        vec![-q.cbrt()]
    } else {
        let disc = -(4.0 * p * p * p + 27.0 * q * q);
        let scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
        if disc.abs() <= 1e-14 * scale {
            // Double root -3q/(2p) and simple root 3q/p.
            vec![3.0 * q / p, -1.5 * q / p]
        } else if disc > 0.0 {
            // p < 0 here.
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            (0..3)
                .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos())
                .collect()
        } else if p < 0.0 {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (-3.0 * q.abs() / (p * m)).max(1.0);
            vec![-q.signum() * m * (arg.acosh() / 3.0).cosh()]
        } else {
            let m = 2.0 * (p / 3.0).sqrt();
            let arg = 3.0 * q / (p * m);
            vec![-m * (arg.asinh() / 3.0).sinh()]
        }
    };
    for r in roots.iter_mut() {
        *r = polish(*r, p, q);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(p: f64, q: f64, expected: &[f64]) {
        let roots = depressed_cubic_real_roots(p, q);
        assert_eq!(roots.len(), expected.len(), "p={p} q={q} roots={roots:?}");
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-9, "root {r} vs {e}");
        }
    }

    #[test]
    fn three_real_roots() {
        // (t-1)(t-2)(t+3) = t^3 - 7t + 6
        check(-7.0, 6.0, &[-3.0, 1.0, 2.0]);
    }

    #[test]
    fn one_real_root_both_signs_of_p() {
        // t^3 + t + 2 = (t+1)(t^2 - t + 2)
        check(1.0, 2.0, &[-1.0]);
        // t^3 - 3t + 4: discriminant -(4*-27 + 27*16) < 0
        let r = depressed_cubic_real_roots(-3.0, 4.0);
        assert_eq!(r.len(), 1);
        assert!(residual(r[0], -3.0, 4.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_roots() {
        // (t-1)^2 (t+2) = t^3 - 3t + 2
        check(-3.0, 2.0, &[-2.0, 1.0]);
        // triple root at zero
        check(0.0, 0.0, &[0.0]);
        // t^3 + 8 = 0
        check(0.0, 8.0, &[-2.0]);
    }
}
