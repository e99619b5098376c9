//! Unbiased log-likelihood estimation for simulator-based models.
//!
//! The estimator draws samples from a model simulator until one matches the
//! observed response; the number of draws converts into an unbiased estimate
//! of the trial log-likelihood with a calibrated variance. On top of that
//! primitive this crate provides dataset-level estimation with early stopping
//! and repeat scheduling, reference simulator models, a noise-aware
//! maximum-likelihood fitter, and the analysis harness used to validate
//! bias, variance, calibration, and parameter-recovery behavior.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod models;
pub mod optimizer;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
