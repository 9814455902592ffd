//! Stochastic CVRPTW domain types and deterministic plan mechanics.
//!
//! Times are minutes (from midnight), costs are unit-agnostic. The depot sits
//! at matrix index [`Instance::depot`] and has no window and no service time.
//! Duration tables passed to the operations here are indexed by activity
//! *position* in [`Instance::activities`], not by activity id.

mod class;
mod feasibility;
mod schedule;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use class::ActivityClass;
pub use feasibility::{check_hard_feasibility, Violation};
pub use schedule::{evaluate_plan, propagate_schedule, RouteStats};

use crate::error::{Error, Result};
use crate::forecast::Attributes;

pub type ActivityId = u32;
pub type VehicleId = u32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub id: ActivityId,
    pub class: ActivityClass,
    pub location: usize,
    pub window_open: f64,
    pub window_close: f64,
    pub attributes: Attributes,
    /// Realized duration; never read while planning.
    pub true_duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub shift_length: f64,
    pub risk_level: f64,
    /// Departure time from the depot (T_0k).
    #[serde(default)]
    pub shift_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

impl Vehicle {
    pub fn new(id: VehicleId, shift_length: f64, risk_level: f64) -> Self {
        Self {
            id,
            shift_length,
            risk_level,
            shift_start: 0.0,
            capacity: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceFile {
    depot: usize,
    activities: Vec<Activity>,
    vehicles: Vec<Vehicle>,
    travel_time: Vec<Vec<f64>>,
    travel_cost: Vec<Vec<f64>>,
    lambda: f64,
}

/// A routing problem. Immutable once built; validated on construction and
/// deserialization.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    pub depot: usize,
    pub activities: Vec<Activity>,
    pub vehicles: Vec<Vehicle>,
    pub travel_time: Vec<Vec<f64>>,
    pub travel_cost: Vec<Vec<f64>>,
    pub lambda: f64,
    positions: HashMap<ActivityId, usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.depot == other.depot
            && self.activities == other.activities
            && self.vehicles == other.vehicles
            && self.travel_time == other.travel_time
            && self.travel_cost == other.travel_cost
            && self.lambda == other.lambda
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        Instance::new(
            f.depot,
            f.activities,
            f.vehicles,
            f.travel_time,
            f.travel_cost,
            f.lambda,
        )
    }
}

impl From<Instance> for InstanceFile {
    fn from(i: Instance) -> Self {
        InstanceFile {
            depot: i.depot,
            activities: i.activities,
            vehicles: i.vehicles,
            travel_time: i.travel_time,
            travel_cost: i.travel_cost,
            lambda: i.lambda,
        }
    }
}

fn check_matrix(name: &str, m: &[Vec<f64>], dim: usize) -> Result<()> {
    if m.len() != dim || m.iter().any(|row| row.len() != dim) {
        return Err(Error::invalid_input(format!("{name} must be {dim}x{dim}")));
    }
    for (i, row) in m.iter().enumerate() {
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid_input(format!(
                "{name} row {i} has a negative or non-finite entry"
            )));
        }
        if row[i] != 0.0 {
            return Err(Error::invalid_input(format!("{name} diagonal at {i} is not zero")));
        }
    }
    Ok(())
}

impl Instance {
    pub fn new(
        depot: usize,
        activities: Vec<Activity>,
        vehicles: Vec<Vehicle>,
        travel_time: Vec<Vec<f64>>,
        travel_cost: Vec<Vec<f64>>,
        lambda: f64,
    ) -> Result<Self> {
        let dim = activities.len() + 1;
        check_matrix("travel_time", &travel_time, dim)?;
        check_matrix("travel_cost", &travel_cost, dim)?;
        if depot >= dim {
            return Err(Error::invalid_input("depot index outside the travel matrices"));
        }
        if !(lambda >= 0.0) {
            return Err(Error::invalid_input("lambda must be nonnegative"));
        }
        let mut positions = HashMap::with_capacity(activities.len());
        for (pos, a) in activities.iter().enumerate() {
            if positions.insert(a.id, pos).is_some() {
                return Err(Error::invalid_input(format!("duplicate activity id {}", a.id)));
            }
            if a.location >= dim {
                return Err(Error::invalid_input(format!("activity {} location out of range", a.id)));
            }
            if !(a.window_open <= a.window_close) {
                return Err(Error::invalid_input(format!("activity {} window is inverted", a.id)));
            }
            if !(a.true_duration >= 0.0) {
                return Err(Error::invalid_input(format!("activity {} has negative duration", a.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for v in &vehicles {
            if !seen.insert(v.id) {
                return Err(Error::invalid_input(format!("duplicate vehicle id {}", v.id)));
            }
            if !(v.shift_length > 0.0) {
                return Err(Error::invalid_input(format!(
                    "vehicle {} shift length must be positive",
                    v.id
                )));
            }
            if !(v.risk_level > 0.0 && v.risk_level < 1.0) {
                return Err(Error::invalid_input(format!(
                    "vehicle {} risk level must be in (0,1)",
                    v.id
                )));
            }
        }
        Ok(Self {
            depot,
            activities,
            vehicles,
            travel_time,
            travel_cost,
            lambda,
            positions,
        })
    }

    pub fn position(&self, id: ActivityId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn activity(&self, id: ActivityId) -> Option<&Activity> {
        self.position(id).map(|p| &self.activities[p])
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    /// Converts activity ids to positions, failing on unknown ids.
    pub fn positions_of(&self, ids: &[ActivityId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.position(id)
                    .ok_or_else(|| Error::invalid_input(format!("unknown activity id {id}")))
            })
            .collect()
    }

    /// Realized durations, by position.
    pub fn true_durations(&self) -> Vec<f64> {
        self.activities.iter().map(|a| a.true_duration).collect()
    }

    #[inline]
    pub(crate) fn time_between(&self, from: usize, to: usize) -> f64 {
        self.travel_time[from][to]
    }

    #[inline]
    pub(crate) fn cost_between(&self, from: usize, to: usize) -> f64 {
        self.travel_cost[from][to]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub vehicle_id: VehicleId,
    pub stops: Vec<ActivityId>,
    pub start_times: Vec<f64>,
}

impl Route {
    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }
}

/// The four minimized criteria of a plan. `served` is stored as a count and
/// enters minimization negated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub travel_cost: f64,
    pub tardiness: f64,
    pub overtime: f64,
    pub served: usize,
}

impl ObjectiveVector {
    pub const DIM: usize = 4;

    pub fn to_minimization(&self) -> [f64; 4] {
        [self.travel_cost, self.tardiness, self.overtime, -(self.served as f64)]
    }

    /// Scalar form `travel + lambda * tardiness` used for reporting.
    pub fn weighted_cost(&self, lambda: f64) -> f64 {
        self.travel_cost + lambda * self.tardiness
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub routes: Vec<Route>,
    pub unserved: BTreeSet<ActivityId>,
    pub objectives: ObjectiveVector,
}

impl Plan {
    /// Builds a plan from per-vehicle stop lists: propagates schedules with
    /// `durations`, collects every unrouted activity into `unserved` and
    /// evaluates the objective vector.
    pub fn build(instance: &Instance, assignment: &[(VehicleId, Vec<ActivityId>)], durations: &[f64]) -> Result<Plan> {
        let mut routes = Vec::with_capacity(assignment.len());
        for (vid, stops) in assignment {
            let vehicle = instance
                .vehicle(*vid)
                .ok_or_else(|| Error::invalid_input(format!("unknown vehicle id {vid}")))?;
            routes.push(propagate_schedule(instance, vehicle, stops, durations)?);
        }
        let objectives = evaluate_plan(instance, &routes, durations)?;
        let routed: BTreeSet<ActivityId> = routes.iter().flat_map(|r| r.stops.iter().copied()).collect();
        let unserved = instance
            .activities
            .iter()
            .map(|a| a.id)
            .filter(|id| !routed.contains(id))
            .collect();
        Ok(Plan {
            routes,
            unserved,
            objectives,
        })
    }

    pub fn served_count(&self) -> usize {
        self.routes.iter().map(|r| r.stops.len()).sum()
    }
}


#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;

    #[test]
    fn instance_json_round_trip() {
        let inst = line_instance(&[0.0, 3.0, 7.0], vec![Vehicle::new(1, 480.0, 0.05)]);
        let json = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&json).unwrap();
        assert_eq!(inst, back);
        assert_eq!(back.position(2), Some(1));
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in [
            "depot",
            "activities",
            "vehicles",
            "travel_time",
            "travel_cost",
            "lambda",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn instance_validation() {
        let good = line_instance(&[0.0, 1.0], vec![Vehicle::new(1, 10.0, 0.1)]);
        let bad_diag = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        let err = Instance::new(
            0,
            good.activities.clone(),
            good.vehicles.clone(),
            bad_diag.clone(),
            bad_diag,
            1.0,
        );
        assert!(err.is_err());
        let mut acts = good.activities.clone();
        acts[0].window_open = 50.0;
        acts[0].window_close = 40.0;
        let m = good.travel_time.clone();
        assert!(Instance::new(0, acts, good.vehicles.clone(), m.clone(), m.clone(), 1.0).is_err());
        let mut acts = good.activities.clone();
        acts[0].location = 9;
        assert!(Instance::new(0, acts, good.vehicles.clone(), m.clone(), m.clone(), 1.0).is_err());
        assert!(Instance::new(
            0,
            good.activities.clone(),
            vec![Vehicle::new(1, 0.0, 0.1)],
            m.clone(),
            m.clone(),
            1.0
        )
        .is_err());
        assert!(Instance::new(
            0,
            good.activities.clone(),
            vec![Vehicle::new(1, 5.0, 1.0)],
            m.clone(),
            m,
            1.0
        )
        .is_err());
    }

    #[test]
    fn plan_json_round_trip() {
        let inst = line_instance(&[0.0, 3.0, 7.0], vec![Vehicle::new(1, 480.0, 0.05)]);
        let plan = Plan::build(&inst, &[(1, vec![2])], &inst.true_durations()).unwrap();
        assert_eq!(plan.unserved.iter().copied().collect::<Vec<_>>(), vec![1]);
        let json = serde_json::to_string_pretty(&plan).unwrap();
        let back: Plan = serde_json::from_str(&json).unwrap();
        assert_eq!(plan, back);
    }
}
