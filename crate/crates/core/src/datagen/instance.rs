//! Daily routing instances built from generated records.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::corpus::Municipality;
use crate::error::{Error, Result};
use crate::forecast::TrainingRecord;
use crate::model::{Activity, Instance, Vehicle};
use crate::seed::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSpec {
    pub n_vehicles: usize,
    /// Minutes from midnight.
    pub shift_start: f64,
    pub shift_length: f64,
    pub risk_level: f64,
    pub speed_km_per_min: f64,
    pub cost_per_km: f64,
    pub lambda: f64,
    pub map_extent_km: f64,
    /// Std of the scatter of addresses around their municipality centre, km.
    pub address_scatter_km: f64,
    /// Share of activities that accept any time in the shift.
    pub open_window_share: f64,
    pub window_min_width: f64,
    pub window_max_width: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self {
            n_vehicles: 5,
            shift_start: 480.0,
            shift_length: 480.0,
            risk_level: 0.05,
            speed_km_per_min: 0.5,
            cost_per_km: 1.0,
            lambda: 1.0,
            map_extent_km: 30.0,
            address_scatter_km: 1.5,
            open_window_share: 0.4,
            window_min_width: 120.0,
            window_max_width: 240.0,
        }
    }
}

impl FleetSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_vehicles > 0
            && self.shift_length > 0.0
            && self.risk_level > 0.0
            && self.risk_level < 1.0
            && self.speed_km_per_min > 0.0
            && self.cost_per_km >= 0.0
            && self.lambda >= 0.0
            && self.map_extent_km > 0.0
            && self.address_scatter_km >= 0.0
            && (0.0..=1.0).contains(&self.open_window_share)
            && 0.0 < self.window_min_width
            && self.window_min_width <= self.window_max_width
            && self.window_max_width <= self.shift_length;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid_config("invalid fleet spec"))
        }
    }
}

/// Builds one day's instance: activity ids 1..=n in record order, the depot
/// at the centre of the map, Euclidean travel.
pub fn generate_instance(records: &[TrainingRecord], fleet: &FleetSpec, rng: &mut Rng) -> Result<Instance> {
    fleet.validate()?;
    if records.is_empty() {
        return Err(Error::invalid_input("cannot build an instance from an empty day"));
    }
    let extent = fleet.map_extent_km;
    let scatter = Normal::new(0.0, fleet.address_scatter_km).expect("validated scatter");
    let mut points = vec![(0.5 * extent, 0.5 * extent)];
    let shift_end = fleet.shift_start + fleet.shift_length;
    let mut activities = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let m = Municipality::from_id(r.attributes.municipality);
        let x = (m.unit_x * extent + scatter.sample(rng)).clamp(0.0, extent);
        let y = (m.unit_y * extent + scatter.sample(rng)).clamp(0.0, extent);
        points.push((x, y));
        let (open, close) = if rng.random::<f64>() < fleet.open_window_share {
            (fleet.shift_start, shift_end)
        } else {
            let width = rng.random_range(fleet.window_min_width..=fleet.window_max_width);
            let centre = f64::from(r.attributes.hour) * 60.0 + 30.0;
            let open = (centre - 0.5 * width).clamp(fleet.shift_start, shift_end - width);
            (open, open + width)
        };
        activities.push(Activity {
            id: i as u32 + 1,
            class: r.class,
            location: i + 1,
            window_open: open,
            window_close: close,
            attributes: r.attributes.clone(),
            true_duration: r.duration,
            demand: None,
        });
    }
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    let travel_time = dist
        .iter()
        .map(|row| row.iter().map(|d| d / fleet.speed_km_per_min).collect())
        .collect();
    let travel_cost = dist
        .iter()
        .map(|row| row.iter().map(|d| d * fleet.cost_per_km).collect())
        .collect();
    let vehicles = (0..fleet.n_vehicles)
        .map(|k| Vehicle {
            id: k as u32 + 1,
            shift_length: fleet.shift_length,
            risk_level: fleet.risk_level,
            shift_start: fleet.shift_start,
            capacity: None,
        })
        .collect();
    Instance::new(0, activities, vehicles, travel_time, travel_cost, fleet.lambda)
}
