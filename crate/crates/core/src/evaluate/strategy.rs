//! Duration inputs for planning.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ForecastModel;
use crate::model::{ActivityClass, Instance};
use crate::solver::DurationEstimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationStrategy {
    /// Realized durations, known in advance.
    Real,
    /// Per-class historical means.
    Default,
    /// Model predictions with residual variances.
    Forecast,
}

impl DurationStrategy {
    pub const ALL: [DurationStrategy; 3] = [Self::Real, Self::Default, Self::Forecast];

    pub fn name(self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Default => "default",
            Self::Forecast => "forecast",
        }
    }
}

impl fmt::Display for DurationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DurationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| Error::invalid_input(format!("unknown strategy {s:?} (expected real, default or forecast)")))
    }
}

/// Everything the three strategies may draw on.
#[derive(Clone, Copy, Debug)]
pub struct StrategyContext<'a> {
    /// Class -> (mean, variance) of historical durations.
    pub default_table: &'a BTreeMap<ActivityClass, (f64, f64)>,
    /// Attach class variances to default estimates (otherwise zero).
    pub default_with_variance: bool,
    pub model: Option<&'a ForecastModel>,
}

/// Per-activity (mu, sigma2), by activity position.
pub fn resolve_durations(
    strategy: DurationStrategy,
    instance: &Instance,
    ctx: &StrategyContext<'_>,
) -> Result<Vec<DurationEstimate>> {
    match strategy {
        DurationStrategy::Real => Ok(instance
            .activities
            .iter()
            .map(|a| DurationEstimate::exact(a.true_duration))
            .collect()),
        DurationStrategy::Default => instance
            .activities
            .iter()
            .map(|a| {
                let &(mean, var) = ctx
                    .default_table
                    .get(&a.class)
                    .ok_or_else(|| Error::invalid_input(format!("no default duration for class {}", a.class)))?;
                Ok(DurationEstimate {
                    mu: mean,
                    sigma2: if ctx.default_with_variance { var } else { 0.0 },
                })
            })
            .collect(),
        DurationStrategy::Forecast => {
            let model = ctx
                .model
                .ok_or_else(|| Error::invalid_input("forecast strategy needs a trained model"))?;
            let table = model
                .variance_table
                .as_ref()
                .ok_or_else(|| Error::invalid_input("forecast model carries no variance table"))?;
            Ok(instance
                .activities
                .iter()
                .map(|a| DurationEstimate {
                    mu: model.predict(a.class, &a.attributes).max(0.0),
                    sigma2: table.variance(a.class),
                })
                .collect())
        }
    }
}

/// Parses a comma-separated strategy list, keeping order and dropping repeats.
pub fn parse_strategies(s: &str) -> Result<Vec<DurationStrategy>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let v: DurationStrategy = part.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::invalid_input("no strategies given"));
    }
    Ok(out)
}
