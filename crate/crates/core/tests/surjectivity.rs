use proptest::prelude::*;
use recdir_core::polypred::{invert_linear_two_step, linear_two_step_map};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_target_has_a_real_preimage(a1 in -10.0f64..10.0, a2 in -10.0f64..10.0) {
        let pre = invert_linear_two_step((a1, a2));
        prop_assert!(!pre.is_empty());
        for b in pre {
            let (f1, f2) = linear_two_step_map(b);
            let scale = 1.0 + b.0.abs().powi(3) + a1.abs() + a2.abs();
            prop_assert!((f1 - a1).abs() <= 1e-9 * scale && (f2 - a2).abs() <= 1e-9 * scale,
                "({a1}, {a2}) -> {b:?} -> ({f1}, {f2})");
        }
    }

    #[test]
    fn forward_then_invert_recovers_a_preimage(b1 in -3.0f64..3.0, b2 in -3.0f64..3.0) {
        let alpha = linear_two_step_map((b1, b2));
        let pre = invert_linear_two_step(alpha);
        prop_assert!(pre.iter().any(|&(c1, c2)| (c1 - b1).abs() < 1e-6 && (c2 - b2).abs() < 1e-6),
            "{:?} missing ({b1}, {b2})", pre);
    }
}
