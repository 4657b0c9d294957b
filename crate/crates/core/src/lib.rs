//! Laboratory for recursive versus direct multi-step forecasting.
//!
//! Modules follow the experiment pipeline: [`polypred`] represents and
//! composes polynomial predictors, [`dgp`] generates synthetic data,
//! [`estimate`] fits least-squares models and moment matrices, [`evtheory`]
//! holds the closed-form noise floors and estimation-variance traces,
//! [`mcharness`] and [`taskspace`] run the Monte Carlo and task-space
//! studies, and [`mlpx`] trains the small recursive/direct MLPs.

pub mod csvout;
pub mod dgp;
pub mod error;
pub mod estimate;
pub mod lsq;
pub mod evtheory;
pub mod mcharness;
pub mod mlpx;
pub mod polypred;
pub mod seeding;
pub mod stats;
pub mod taskspace;

pub use error::{Error, Result};
