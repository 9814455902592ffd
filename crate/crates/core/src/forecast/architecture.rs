use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::{FeatureEncoder, FeatureVector, TrainingRecord, N_FEATURES};
use super::gbt::{fit_gbt, Ensemble, FitTrace, Hyperparams};
use crate::error::{Error, Result};
use crate::model::ActivityClass;
use crate::risk::VarianceTable;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    Weighted,
    Dual,
    DualWeighted,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Standard,
        Variant::Weighted,
        Variant::Dual,
        Variant::DualWeighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Weighted => "weighted",
            Variant::Dual => "dual",
            Variant::DualWeighted => "dual_weighted",
        }
    }

    pub fn is_dual(self) -> bool {
        matches!(self, Variant::Dual | Variant::DualWeighted)
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, Variant::Weighted | Variant::DualWeighted)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid_input(format!("unknown model variant {s:?}")))
    }
}

/// Inverse-frequency weights `n / (n_c * |C|)`.
pub fn class_weights<K: Ord + Copy + fmt::Debug>(counts: &BTreeMap<K, usize>) -> Result<BTreeMap<K, f64>> {
    if let Some((k, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(Error::invalid_input(format!("class {k:?} has no samples")));
    }
    let n: usize = counts.values().sum();
    let c = counts.len() as f64;
    Ok(counts.iter().map(|(&k, &nc)| (k, n as f64 / (nc as f64 * c))).collect())
}

fn weights_by<K: Ord + Copy + fmt::Debug>(keys: &[K]) -> Result<Vec<f64>> {
    let mut counts = BTreeMap::new();
    for k in keys {
        *counts.entry(*k).or_insert(0usize) += 1;
    }
    let w = class_weights(&counts)?;
    Ok(keys.iter().map(|k| w[k]).collect())
}

/// Which records a component serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    All,
    TypeZ,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub role: Role,
    pub ensemble: Ensemble,
}

/// A trained duration forecaster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub version: u32,
    pub variant: Variant,
    pub hyperparams: Hyperparams,
    pub encoder: FeatureEncoder,
    pub components: Vec<Component>,
    #[serde(default)]
    pub variance_table: Option<VarianceTable>,
}

impl ForecastModel {
    fn component(&self, class: ActivityClass) -> &Ensemble {
        let want = if !self.variant.is_dual() {
            Role::All
        } else if class.is_z() {
            Role::TypeZ
        } else {
            Role::Other
        };
        &self
            .components
            .iter()
            .find(|c| c.role == want)
            .unwrap_or(&self.components[0])
            .ensemble
    }

    /// Point forecast in minutes.
    pub fn predict(&self, class: ActivityClass, attributes: &super::Attributes) -> f64 {
        self.predict_encoded(class, &self.encoder.encode(class, attributes))
    }

    pub fn predict_encoded(&self, class: ActivityClass, x: &FeatureVector) -> f64 {
        self.component(class).predict(x)
    }

    /// Gain importance per component role.
    pub fn gain_importance(&self) -> Vec<(Role, [f64; N_FEATURES])> {
        self.components
            .iter()
            .map(|c| (c.role, c.ensemble.gain_importance()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ForecastModel = serde_json::from_str(s)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid_input(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }
}

fn fit_part(
    records: &[&TrainingRecord],
    encoder: &FeatureEncoder,
    weights: Vec<f64>,
    hp: &Hyperparams,
) -> Result<(Ensemble, FitTrace)> {
    let x: Vec<FeatureVector> = records.iter().map(|r| encoder.encode(r.class, &r.attributes)).collect();
    let y: Vec<f64> = records.iter().map(|r| r.duration).collect();
    fit_gbt(&x, &y, &weights, hp)
}

/// Trains `variant` on `records` and returns the model with one fit trace per
/// component.
pub fn fit_architecture_traced(
    variant: Variant,
    records: &[TrainingRecord],
    hp: &Hyperparams,
) -> Result<(ForecastModel, Vec<FitTrace>)> {
    let encoder = FeatureEncoder::fit(records.iter().map(|r| &r.attributes));
    let mut components = Vec::new();
    let mut traces = Vec::new();
    if variant.is_dual() {
        let (z, other): (Vec<&TrainingRecord>, Vec<&TrainingRecord>) = records.iter().partition(|r| r.class.is_z());
        if z.is_empty() || other.is_empty() {
            return Err(Error::invalid_input(
                "dual architectures need both Type-Z and other records",
            ));
        }
        // Type-Z is weighted by meter-class subtype, the rest by activity class.
        let (wz, wo) = if variant.is_weighted() {
            let zk: Vec<u8> = z.iter().map(|r| r.attributes.meter_class).collect();
            let ok: Vec<ActivityClass> = other.iter().map(|r| r.class).collect();
            (weights_by(&zk)?, weights_by(&ok)?)
        } else {
            (vec![1.0; z.len()], vec![1.0; other.len()])
        };
        for (role, part, w) in [(Role::TypeZ, z, wz), (Role::Other, other, wo)] {
            let (ensemble, trace) = fit_part(&part, &encoder, w, hp)?;
            components.push(Component { role, ensemble });
            traces.push(trace);
        }
    } else {
        let all: Vec<&TrainingRecord> = records.iter().collect();
        let w = if variant.is_weighted() {
            weights_by(&records.iter().map(|r| r.class).collect::<Vec<_>>())?
        } else {
            vec![1.0; records.len()]
        };
        let (ensemble, trace) = fit_part(&all, &encoder, w, hp)?;
        components.push(Component {
            role: Role::All,
            ensemble,
        });
        traces.push(trace);
    }
    Ok((
        ForecastModel {
            version: MODEL_FORMAT_VERSION,
            variant,
            hyperparams: *hp,
            encoder,
            components,
            variance_table: None,
        },
        traces,
    ))
}

pub fn fit_architecture(variant: Variant, records: &[TrainingRecord], hp: &Hyperparams) -> Result<ForecastModel> {
    fit_architecture_traced(variant, records, hp).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::Attributes;
    use chrono::NaiveDate;
    use ActivityClass::*;

    #[test]
    fn weight_examples() {
        let w = class_weights(&BTreeMap::from([(A, 50), (C, 50)])).unwrap();
        assert_eq!(w[&A], 1.0);
        assert_eq!(w[&C], 1.0);
        let w = class_weights(&BTreeMap::from([(A, 80), (C, 20)])).unwrap();
        assert_eq!(w[&A], 0.625);
        assert_eq!(w[&C], 2.5);
        assert_eq!(80.0 * w[&A] + 20.0 * w[&C], 100.0);
        let w = class_weights(&BTreeMap::from([(A, 7)])).unwrap();
        assert_eq!(w[&A], 1.0);
        assert!(class_weights(&BTreeMap::from([(A, 7), (C, 0)])).is_err());
    }

    fn rec(class: ActivityClass, meter: u8, hour: u8, duration: f64) -> TrainingRecord {
        TrainingRecord {
            class,
            attributes: Attributes {
                date: NaiveDate::from_ymd_opt(2024, 3, 4).unwrap(),
                hour,
                meter_class: meter,
                ..Default::default()
            },
            duration,
        }
    }

    fn corpus() -> Vec<TrainingRecord> {
        let mut v = Vec::new();
        for i in 0..40u8 {
            v.push(rec(Z, i % 2, 8 + i % 6, if i % 2 == 0 { 18.0 } else { 60.0 }));
            v.push(rec(E, i % 3, 8 + i % 6, 20.0 + f64::from(i % 6)));
            v.push(rec(F, 0, 9, 15.0));
        }
        v
    }

    #[test]
    fn dual_routes_by_class() {
        let hp = Hyperparams {
            n_trees: 20,
            learning_rate: 0.3,
            max_depth: 3,
            ..Default::default()
        };
        let m = fit_architecture(Variant::Dual, &corpus(), &hp).unwrap();
        assert_eq!(m.components.len(), 2);
        let z = rec(Z, 1, 9, 0.0);
        let x = m.encoder.encode(Z, &z.attributes);
        let z_only = m.components.iter().find(|c| c.role == Role::TypeZ).unwrap();
        assert_eq!(m.predict(Z, &z.attributes), z_only.ensemble.predict(&x));
        let other = m.components.iter().find(|c| c.role == Role::Other).unwrap();
        let e = rec(E, 1, 9, 0.0);
        assert_eq!(
            m.predict(E, &e.attributes),
            other.ensemble.predict(&m.encoder.encode(E, &e.attributes))
        );
        assert!((m.predict(Z, &z.attributes) - 60.0).abs() < 2.0);
    }

    #[test]
    fn dual_needs_both_partitions() {
        let only_e: Vec<TrainingRecord> = corpus().into_iter().filter(|r| r.class == E).collect();
        let hp = Hyperparams {
            n_trees: 2,
            ..Default::default()
        };
        assert!(matches!(
            fit_architecture(Variant::Dual, &only_e, &hp),
            Err(Error::InvalidInput(_))
        ));
        assert!(fit_architecture(Variant::Standard, &only_e, &hp).is_ok());
    }

    #[test]
    fn standard_equals_unit_weight_boosting() {
        let recs = corpus();
        let hp = Hyperparams {
            n_trees: 5,
            max_depth: 2,
            ..Default::default()
        };
        let m = fit_architecture(Variant::Standard, &recs, &hp).unwrap();
        let x: Vec<FeatureVector> = recs.iter().map(|r| m.encoder.encode(r.class, &r.attributes)).collect();
        let y: Vec<f64> = recs.iter().map(|r| r.duration).collect();
        let (e, _) = fit_gbt(&x, &y, &vec![1.0; recs.len()], &hp).unwrap();
        assert_eq!(m.components[0].ensemble, e);
    }

    #[test]
    fn dual_weighted_other_partition_ignores_z_counts() {
        // Oracle: recompute inverse-frequency weights on the non-Z partition only.
        let recs = corpus();
        let other: Vec<&TrainingRecord> = recs.iter().filter(|r| !r.class.is_z()).collect();
        let mut counts = BTreeMap::new();
        for r in &other {
            *counts.entry(r.class).or_insert(0usize) += 1;
        }
        let n = other.len() as f64;
        let expected_e = n / (counts[&E] as f64 * counts.len() as f64);
        let hp = Hyperparams {
            n_trees: 3,
            max_depth: 2,
            ..Default::default()
        };
        let m = fit_architecture(Variant::DualWeighted, &recs, &hp).unwrap();
        let x: Vec<FeatureVector> = other.iter().map(|r| m.encoder.encode(r.class, &r.attributes)).collect();
        let y: Vec<f64> = other.iter().map(|r| r.duration).collect();
        let w: Vec<f64> = other
            .iter()
            .map(|r| n / (counts[&r.class] as f64 * counts.len() as f64))
            .collect();
        assert_eq!(w[0], expected_e);
        assert_eq!(expected_e, 1.0); // 40 E and 40 F records
        let (e, _) = fit_gbt(&x, &y, &w, &hp).unwrap();
        let comp = m.components.iter().find(|c| c.role == Role::Other).unwrap();
        assert_eq!(comp.ensemble, e);
    }

    #[test]
    fn model_json_round_trip_and_version_check() {
        let hp = Hyperparams {
            n_trees: 3,
            max_depth: 2,
            ..Default::default()
        };
        let m = fit_architecture(Variant::Weighted, &corpus(), &hp).unwrap();
        let s = m.to_json().unwrap();
        assert_eq!(ForecastModel::from_json(&s).unwrap(), m);
        let bumped = s.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(ForecastModel::from_json(&bumped).is_err());
        assert_eq!("dual_weighted".parse::<Variant>().unwrap(), Variant::DualWeighted);
    }
}
