//! Risk-aware stochastic vehicle routing.
//!
//! The crate covers the full planning pipeline:
//!
//! - [`datagen`]: synthetic intervention corpora and routing instances;
//! - [`forecast`]: duration forecasters built on gradient-boosted trees;
//! - [`risk`]: proxy variances, sub-Gaussian route buffers and conformal bounds;
//! - [`model`]: the stochastic CVRPTW, schedule propagation and objectives;
//! - [`solver`]: a forecast-aware NSGA-III solver;
//! - [`evaluate`]: replay of plans against realized durations and KPI reports.
//!
//! Data-parallel loops (Monte-Carlo trials, population evaluation, split
//! search, grid search, day sweeps) run on rayon when the `parallel` feature
//! is on. Every parallel work item draws from its own derived seed, so results
//! are identical for any thread count.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod evaluate;
pub mod forecast;
pub mod model;
pub mod par;
pub mod risk;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
