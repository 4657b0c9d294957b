use recdir_core::dgp::TaskTheta;
use recdir_core::seeding::rng_from_seed;
use recdir_core::taskspace::{build_task_box, distance_to_recursive};
use recdir_core::dgp::{sample_task, Interval};
use rand::Rng;

fn g(b: &[f64; 3]) -> [f64; 5] {
    let [b1, b2, b3] = *b;
    [b1 * b1 + b2, b1 * b2, b3 * (b1 + b2), b1 * b3, b3 * b3]
}

fn sq_dist(t: &[f64; 5], b: &[f64; 3]) -> f64 {
    g(b).iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nelder_mead(f: impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], step: f64) -> [f64; 3] {
    let mut s: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut x = x0;
            if i > 0 {
                x[i - 1] += step;
            }
            (x, f(&x))
        })
        .collect();
    for _ in 0..5000 {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        if s[3].1 - s[0].1 < 1e-18 {
            break;
        }
        let c: [f64; 3] = std::array::from_fn(|k| (s[0].0[k] + s[1].0[k] + s[2].0[k]) / 3.0);
        let at = |t: f64| -> [f64; 3] { std::array::from_fn(|k| c[k] + t * (s[3].0[k] - c[k])) };
        let r = at(-1.0);
        let fr = f(&r);
        if fr < s[0].1 {
            let e = at(-2.0);
            let fe = f(&e);
            s[3] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < s[2].1 {
            s[3] = (r, fr);
        } else {
            let k = at(0.5);
            let fk = f(&k);
            if fk < s[3].1 {
                s[3] = (k, fk);
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    v.0 = std::array::from_fn(|k| best[k] + 0.5 * (v.0[k] - best[k]));
                    v.1 = f(&v.0);
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.total_cmp(&b.1));
    s[0].0
}

/// Dense grid over `[-3, 3]^3` at spacing 0.05, then a simplex polish.
fn grid_distance(theta: &TaskTheta) -> f64 {
    let t: [f64; 5] = std::array::from_fn(|k| theta.theta[k]);
    let f = |b: &[f64; 3]| sq_dist(&t, b);
    let axis: Vec<f64> = (0..=120).map(|i| -3.0 + 0.05 * i as f64).collect();
    let mut best = (f64::INFINITY, [0.0; 3]);
    for &x in &axis {
        for &y in &axis {
            for &z in &axis {
                let b = [x, y, z];
                let v = f(&b);
                if v < best.0 {
                    best = (v, b);
                }
            }
        }
    }
    let b = nelder_mead(f, best.1, 0.05);
    (f(&b).min(best.0) + theta.theta[5].powi(2)).sqrt()
}

#[test]
fn projection_matches_grid_oracle() {
    let bbox = build_task_box(20_000, Interval::new(-1.5, 1.5), 3).unwrap();
    let bounds = bbox.bounds();
    let mut rng = rng_from_seed(77);
    for k in 0..5 {
        let theta = sample_task(&bounds, rng.gen()).unwrap();
        let fast = distance_to_recursive(&theta, 16, k).unwrap().distance;
        let oracle = grid_distance(&theta);
        assert!((fast - oracle).abs() < 1e-4, "task {k}: {fast} vs {oracle}");
    }
}
