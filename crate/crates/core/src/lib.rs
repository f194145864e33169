//! Point-treatment causal effect estimation without the standard library.
//!
//! The crate covers the numeric half of a targeted-learning analysis:
//!
//! - [`data`]: typed cohort tables with column roles and timing, validation,
//!   treatment dichotomization and category recoding.
//! - [`learners`]: prediction algorithms with a shared fit/predict contract.
//! - [`super_learner`]: V-fold cross-validated convex stacking.
//! - [`tmle`]: targeted estimation of the risk difference, risk ratio and odds
//!   ratio with influence-curve inference.
//! - [`diagnostics`]: positivity tables, propensity overlap and C-statistic.
//! - [`sensitivity`]: causal-gap shifts of an estimate and its interval.
//! - [`sim`]: known-truth data generation and replication studies.
//!
//! Everything here is a pure function of its inputs (and seeds); file formats
//! and the command line live in the `targeted` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod diagnostics;
mod error;
pub mod learners;
pub mod math;
pub mod matrix;
pub mod sensitivity;
pub mod sim;
pub mod super_learner;
pub mod tmle;

pub use error::{Error, Result};
pub use matrix::Matrix;
