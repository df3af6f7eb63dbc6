//! Ordinal regression with calibrated, unimodal predictions.
//!
//! - [`encoding`]: one-hot, label-smoothed and soft ordinal targets
//! - [`losses`]: cross-entropy family, the log-barrier unimodality
//!   regularizer and their sum, all with analytic logit gradients
//! - [`metrics`]: ECE, SCE, ACE, QWK, %unimodal, accuracy, MAE and
//!   reliability-bin export
//! - [`data`]: ordered-logit synthetic data, splits, CSV
//! - [`trainer`]: linear / tanh-MLP models with hand-written backprop
//! - [`cli`]: the `orcu` command-line tool

pub mod cli;
pub mod data;
pub mod encoding;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod trainer;

pub use error::{Error, Result};
