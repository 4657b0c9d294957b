//! The two-lag linear case in closed form.

use super::cubic::depressed_cubic_real_roots;

/// `(b_1, b_2) -> (b_1^2 + b_2, b_1 b_2)`: coefficients of the two-step
/// predictor obtained by iterating `b_1 y_t + b_2 y_{t-1}` twice.
pub fn linear_two_step_map(b: (f64, f64)) -> (f64, f64) {
    let (b1, b2) = b;
    (b1 * b1 + b2, b1 * b2)
}

/// Every real preimage of `alpha` under [`linear_two_step_map`].
///
/// Substituting `b_2 = alpha_1 - b_1^2` leaves `b_1^3 - alpha_1 b_1 + alpha_2 = 0`,
/// which always has a real root, so the result is never empty.
pub fn invert_linear_two_step(alpha: (f64, f64)) -> Vec<(f64, f64)> {
    let (a1, a2) = alpha;
    depressed_cubic_real_roots(-a1, a2)
        .into_iter()
        .map(|b1| (b1, a1 - b1 * b1))
        .collect()
}
