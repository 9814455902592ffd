//! Raw intervention attributes and the fixed 31-column feature layout.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::model::ActivityClass;

/// Attributes known at planning time. Geographic numerics may be missing and
/// are imputed with training medians by [`FeatureEncoder`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Attributes {
    pub date: NaiveDate,
    /// Scheduled hour of day, 0..24.
    pub hour: u8,
    pub municipality: u32,
    pub altitude: Option<f64>,
    pub population: Option<f64>,
    pub surface_area: Option<f64>,
    pub urbanization: u8,
    pub altimetric_zone: u8,
    pub meter_class: u8,
    pub accessibility: u8,
    pub reading_difficulty: u8,
    pub protocol: u8,
    pub client_source: u8,
}

impl Attributes {
    /// Monday = 0.
    pub fn day_of_week(&self) -> u32 {
        self.date.weekday().num_days_from_monday()
    }

    /// 1..=12.
    pub fn month(&self) -> u32 {
        self.date.month()
    }
}

/// One labelled intervention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub class: ActivityClass,
    pub attributes: Attributes,
    /// Observed duration in minutes.
    pub duration: f64,
}

impl TrainingRecord {
    pub fn date(&self) -> NaiveDate {
        self.attributes.date
    }
}

pub const N_FEATURES: usize = 31;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "hour_sin",
    "hour_cos",
    "dow_sin",
    "dow_cos",
    "month_sin",
    "month_cos",
    "altitude",
    "population",
    "surface_area",
    "urbanization",
    "density",
    "activity_class",
    "meter_class",
    "accessibility",
    "reading_difficulty",
    "protocol",
    "client_source",
    "hour",
    "day_of_week",
    "month",
    "is_weekend",
    "altimetric_zone",
    "municipality",
    "log_population",
    "log_density",
    "is_type_z",
    "z_x_meter_class",
    "z_x_hour_sin",
    "morning_window",
    "afternoon_window",
    "access_x_difficulty",
];

/// Encoded model input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

/// `(sin 2*pi*t/T, cos 2*pi*t/T)`.
pub fn cyclical(t: f64, period: f64) -> (f64, f64) {
    let angle = 2.0 * PI * t / period;
    (angle.sin(), angle.cos())
}

/// Code assigned to categorical values never seen during fitting.
pub const UNKNOWN_CATEGORY: f64 = -1.0;

const N_CATEGORICAL: usize = 8;

fn categorical_values(a: &Attributes) -> [u32; N_CATEGORICAL] {
    [
        u32::from(a.urbanization),
        u32::from(a.altimetric_zone),
        u32::from(a.meter_class),
        u32::from(a.accessibility),
        u32::from(a.reading_difficulty),
        u32::from(a.protocol),
        u32::from(a.client_source),
        a.municipality,
    ]
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Training-set statistics needed to encode attributes: medians for
/// imputation and the set of categorical codes seen.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub altitude_median: f64,
    pub population_median: f64,
    pub surface_median: f64,
    pub known: Vec<BTreeSet<u32>>,
}

impl FeatureEncoder {
    pub fn fit<'a>(attrs: impl IntoIterator<Item = &'a Attributes>) -> Self {
        let mut alt = Vec::new();
        let mut pop = Vec::new();
        let mut surf = Vec::new();
        let mut known = vec![BTreeSet::new(); N_CATEGORICAL];
        for a in attrs {
            alt.extend(a.altitude);
            pop.extend(a.population);
            surf.extend(a.surface_area);
            for (set, v) in known.iter_mut().zip(categorical_values(a)) {
                set.insert(v);
            }
        }
        Self {
            altitude_median: median(alt),
            population_median: median(pop),
            surface_median: median(surf),
            known,
        }
    }

    fn category(&self, slot: usize, value: u32) -> f64 {
        match self.known.get(slot) {
            Some(set) if set.contains(&value) => f64::from(value),
            _ => UNKNOWN_CATEGORY,
        }
    }

    pub fn encode(&self, class: ActivityClass, a: &Attributes) -> FeatureVector {
        let hour = f64::from(a.hour);
        let dow = f64::from(a.day_of_week());
        let month = f64::from(a.month());
        let (hour_sin, hour_cos) = cyclical(hour, 24.0);
        let (dow_sin, dow_cos) = cyclical(dow, 7.0);
        let (month_sin, month_cos) = cyclical(month - 1.0, 12.0);

        let altitude = a.altitude.unwrap_or(self.altitude_median);
        let population = a.population.unwrap_or(self.population_median);
        let surface = a.surface_area.unwrap_or(self.surface_median);
        let density = if surface > 0.0 { population / surface } else { 0.0 };

        let cats = categorical_values(a);
        let c = |slot: usize| self.category(slot, cats[slot]);
        let urbanization = c(0);
        let zone = c(1);
        let meter = c(2);
        let access = c(3);
        let difficulty = c(4);
        let protocol = c(5);
        let client = c(6);
        let municipality = c(7);

        let is_z = if class.is_z() { 1.0 } else { 0.0 };
        let flag = |b: bool| if b { 1.0 } else { 0.0 };

        FeatureVector([
            hour_sin,
            hour_cos,
            dow_sin,
            dow_cos,
            month_sin,
            month_cos,
            altitude,
            population,
            surface,
            urbanization,
            density,
            class.ordinal() as f64,
            meter,
            access,
            difficulty,
            protocol,
            client,
            hour,
            dow,
            month,
            flag(dow >= 5.0),
            zone,
            municipality,
            population.max(0.0).ln_1p(),
            density.max(0.0).ln_1p(),
            is_z,
            is_z * meter,
            is_z * hour_sin,
            flag((8..=11).contains(&a.hour)),
            flag((14..=17).contains(&a.hour)),
            access * difficulty,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
    }

    #[test]
    fn cyclical_hours() {
        assert!(close(cyclical(6.0, 24.0), (1.0, 0.0)));
        assert!(close(cyclical(0.0, 24.0), (0.0, 1.0)));
        assert!(close(cyclical(18.0, 24.0), (-1.0, 0.0)));
    }

    fn attrs() -> Attributes {
        Attributes {
            date: NaiveDate::from_ymd_opt(2024, 6, 5).unwrap(),
            hour: 9,
            municipality: 3,
            altitude: Some(200.0),
            population: Some(1000.0),
            surface_area: Some(10.0),
            urbanization: 2,
            altimetric_zone: 1,
            meter_class: 1,
            accessibility: 0,
            reading_difficulty: 1,
            protocol: 2,
            client_source: 4,
        }
    }

    #[test]
    fn layout_and_imputation() {
        let mut other = attrs();
        other.altitude = Some(400.0);
        other.population = Some(3000.0);
        let enc = FeatureEncoder::fit([&attrs(), &other]);
        assert_eq!(enc.altitude_median, 300.0);

        let mut missing = attrs();
        missing.altitude = None;
        missing.meter_class = 9;
        let f = enc.encode(ActivityClass::Z, &missing);
        assert_eq!(f.get("altitude"), Some(300.0));
        assert_eq!(f.get("meter_class"), Some(UNKNOWN_CATEGORY));
        assert_eq!(f.get("density"), Some(100.0));
        assert_eq!(f.get("is_type_z"), Some(1.0));
        assert_eq!(f.get("day_of_week"), Some(2.0)); // a Wednesday
        assert_eq!(f.get("month"), Some(6.0));
        assert_eq!(f.get("morning_window"), Some(1.0));
        assert_eq!(f.get("activity_class"), Some(17.0));
        assert_eq!(enc.encode(ActivityClass::Z, &missing), f);
    }

    proptest! {
        #[test]
        fn cyclical_pairs_lie_on_the_circle(hour in 0u8..24, day in 0i64..3650) {
            let mut a = attrs();
            a.hour = hour;
            a.date = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap() + chrono::Duration::days(day);
            let f = FeatureEncoder::fit([&a]).encode(ActivityClass::E, &a).0;
            for k in [0, 2, 4] {
                prop_assert!((f[k] * f[k] + f[k + 1] * f[k + 1] - 1.0).abs() < 1e-9);
            }
        }
    }
}
