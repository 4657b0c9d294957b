//! Small tanh perceptron trained as a recursive or a direct multi-step
//! forecaster on a univariate series.

pub mod data;
pub mod net;
pub mod train;

pub use data::{load_series, split_standardize, Scaler, WindowSet};
pub use net::{
    eval_mse, predict_steps, loss_and_grad, network_shape, Activation, MlpParams, Strategy, TwoStepLoss,
};
pub use train::{
    plateau, ratio_report, run_study, train, train_with_params, RatioReport, RatioRow, RunRecord, StudyConfig,
    StudyReport, TrainConfig,
};
