//! Forward model and parameter estimation for homodyne noise spectra of
//! light reflected from a linearized cavity-optomechanical system.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod error;
pub mod estimator;
pub mod instrument;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod params;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
