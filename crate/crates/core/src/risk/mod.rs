//! Duration uncertainty: per-class proxy variances, sub-Gaussian route
//! buffers, split-conformal upper widths with a Bonferroni route bound, and a
//! Monte-Carlo harness for checking route-level overrun rates.

mod buffer;
mod conformal;
mod monte_carlo;
mod variance;

pub use buffer::{buffer_from_total, check_route_chance_feasible, route_buffer, ChanceCheck};
pub use conformal::{conformal_calibrate, conformal_quantile, conformal_route_bound, ConformalTable};
pub use monte_carlo::{monte_carlo_violation_rate, GaussianResiduals, RouteRisk};
pub use variance::{estimate_variances, VarianceTable};

use serde::{Deserialize, Serialize};

use crate::model::ActivityClass;

/// Observed duration and its point prediction for one activity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub class: ActivityClass,
    pub observed: f64,
    pub predicted: f64,
}

impl Residual {
    pub fn new(class: ActivityClass, observed: f64, predicted: f64) -> Self {
        Self {
            class,
            observed,
            predicted,
        }
    }

    /// Nonconformity score `y - mu`.
    pub fn score(&self) -> f64 {
        self.observed - self.predicted
    }
}
