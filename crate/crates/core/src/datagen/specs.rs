use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ActivityClass;

/// One lognormal mixture component, parameterised by its median and log-sd.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub median: f64,
    pub sigma: f64,
}

/// Pre-clip duration law of a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DurationShape {
    /// Lognormal moment-matched to the class mean and standard deviation.
    MomentMatched,
    /// Two lognormal modes; the long mode is drawn with a probability that
    /// depends on the meter class.
    Bimodal {
        short: Component,
        long: Component,
        /// P(long mode | meter class), indexed by meter class.
        long_prob_by_meter: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityClassSpec {
    pub class: ActivityClass,
    pub name: String,
    /// Record count in the reference statistics.
    pub count: u64,
    pub mix_weight: f64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub shape: DurationShape,
}

impl ActivityClassSpec {
    /// `(mu, sigma)` of the lognormal with this class's mean and std.
    pub fn lognormal_params(&self) -> (f64, f64) {
        lognormal_from_moments(self.mean, self.std)
    }
}

pub fn lognormal_from_moments(mean: f64, std: f64) -> (f64, f64) {
    let s2 = (1.0 + (std / mean).powi(2)).ln();
    (mean.ln() - 0.5 * s2, s2.sqrt())
}

/// Meter-class distribution used by the generator (residential first).
pub const METER_CLASS_PROBS: [f64; 4] = [0.55, 0.25, 0.15, 0.05];

// code, name, count, mean, std, min, max
const TABLE: [(ActivityClass, &str, u64, f64, f64, f64, f64); 16] = [
    (ActivityClass::A, "Work quotation", 10_319, 55.79, 21.71, 10.0, 119.0),
    (ActivityClass::C, "Work execution", 5_112, 32.55, 28.04, 10.0, 119.0),
    (
        ActivityClass::E,
        "Supply activation",
        255_288,
        24.57,
        10.41,
        10.0,
        119.0,
    ),
    (
        ActivityClass::F,
        "Supply deactivation",
        131_657,
        19.01,
        9.12,
        10.0,
        118.0,
    ),
    (
        ActivityClass::H,
        "Metrological verification",
        1_550,
        45.59,
        20.36,
        10.0,
        119.0,
    ),
    (ActivityClass::J, "Meter reading", 1_676, 45.53, 22.34, 10.0, 119.0),
    (ActivityClass::L, "Reading request", 1_261, 18.42, 10.38, 10.0, 106.0),
    (
        ActivityClass::M,
        "Closure for arrears",
        38_744,
        20.75,
        10.96,
        10.0,
        119.0,
    ),
    (ActivityClass::N, "Meter closure", 137, 24.39, 15.08, 10.0, 98.0),
    (ActivityClass::O, "Meter reading", 50_487, 18.33, 12.64, 10.0, 118.0),
    (ActivityClass::Q, "Removal of sensors", 1_605, 25.09, 13.72, 10.0, 114.0),
    (ActivityClass::R, "Meter removal", 6_159, 23.40, 16.63, 10.0, 119.0),
    (ActivityClass::S, "Safety shutdown", 360, 26.85, 19.82, 10.0, 105.0),
    (ActivityClass::T, "Data provision", 15_972, 23.46, 9.33, 10.0, 119.0),
    (
        ActivityClass::X,
        "Interruption for arrears",
        705,
        31.56,
        20.63,
        10.0,
        117.0,
    ),
    (
        ActivityClass::Z,
        "Meter replacement",
        233_143,
        26.73,
        19.94,
        10.0,
        119.0,
    ),
];

/// The 16 classes with enough history to train on (I and W are left out),
/// with mix weights proportional to their record counts.
pub fn default_class_specs() -> Vec<ActivityClassSpec> {
    let total: u64 = TABLE.iter().map(|r| r.2).sum();
    TABLE
        .iter()
        .map(|&(class, name, count, mean, std, min, max)| ActivityClassSpec {
            class,
            name: name.to_string(),
            count,
            mix_weight: count as f64 / total as f64,
            mean,
            std,
            min,
            max,
            shape: if class.is_z() {
                DurationShape::Bimodal {
                    short: Component {
                        median: 14.66,
                        sigma: 0.5415,
                    },
                    long: Component {
                        median: 60.0,
                        sigma: 0.12,
                    },
                    long_prob_by_meter: vec![0.02, 0.12, 0.80, 0.98],
                }
            } else {
                DurationShape::MomentMatched
            },
        })
        .collect()
}

pub fn spec_for(specs: &[ActivityClassSpec], class: ActivityClass) -> Result<&ActivityClassSpec> {
    specs
        .iter()
        .find(|s| s.class == class)
        .ok_or_else(|| Error::invalid_input(format!("no generator spec for class {class}")))
}

/// Per-class `(mean, variance)` of the reference statistics: the static
/// durations a planner uses without a forecaster.
pub fn default_duration_table(specs: &[ActivityClassSpec]) -> BTreeMap<ActivityClass, (f64, f64)> {
    specs.iter().map(|s| (s.class, (s.mean, s.std * s.std))).collect()
}

pub fn validate_specs(specs: &[ActivityClassSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid_config("class spec table is empty"));
    }
    let total: f64 = specs.iter().map(|s| s.mix_weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid_config(format!("mix weights sum to {total}, not 1")));
    }
    for s in specs {
        if !(s.mean > 0.0 && s.std >= 0.0 && s.min <= s.max && s.mix_weight >= 0.0) {
            return Err(Error::invalid_config(format!("invalid spec for class {}", s.class)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rows() {
        let specs = default_class_specs();
        assert_eq!(specs.len(), 16);
        assert!(specs
            .iter()
            .all(|s| s.class != ActivityClass::I && s.class != ActivityClass::W));
        let e = spec_for(&specs, ActivityClass::E).unwrap();
        assert_eq!((e.count, e.mean, e.std), (255_288, 24.57, 10.41));
        let z = spec_for(&specs, ActivityClass::Z).unwrap();
        assert_eq!((z.count, z.mean, z.std), (233_143, 26.73, 19.94));
        assert_eq!(spec_for(&specs, ActivityClass::F).unwrap().mean, 19.01);
        let total: f64 = specs.iter().map(|s| s.mix_weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        validate_specs(&specs).unwrap();
        assert!(spec_for(&specs, ActivityClass::I).is_err());
    }

    #[test]
    fn lognormal_moments() {
        let (mu, s) = lognormal_from_moments(19.01, 9.12);
        let mean = (mu + 0.5 * s * s).exp();
        let var = ((s * s).exp() - 1.0) * (2.0 * mu + s * s).exp();
        assert!((mean - 19.01).abs() < 1e-9);
        assert!((var.sqrt() - 9.12).abs() < 1e-9);
    }

    #[test]
    fn specs_json_round_trip() {
        let specs = default_class_specs();
        let s = serde_json::to_string_pretty(&specs).unwrap();
        let back: Vec<ActivityClassSpec> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, specs);
    }
}
