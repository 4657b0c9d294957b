//! Sparse polynomial predictors over lag windows, their symbolic h-fold
//! composition, and the Jacobian of the induced parameter map.

mod compose;
mod cubic;
mod linear;
mod monomial;
mod predictor;

pub use compose::{compose, compose_family, jacobian, CompositionMap, CompositionResult, ParamPoly};
pub use cubic::depressed_cubic_real_roots;
pub use linear::{invert_linear_two_step, linear_two_step_map};
pub use monomial::Monomial;
pub use predictor::{PolyPredictor, PredictorFamily};

/// Evaluates `pred` on a window; free-function form of [`PolyPredictor::eval`].
pub fn eval(pred: &PolyPredictor, window: &[f64]) -> crate::Result<f64> {
    pred.eval(window)
}
