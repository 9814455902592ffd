use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActivityId, Instance, Plan, VehicleId};

/// A hard-constraint violation found in a plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "kebab-case")]
pub enum Violation {
    /// Activity appears more than once across (or within) routes.
    DuplicateVisit {
        id: ActivityId,
    },
    /// Activity is both routed and listed as unserved.
    ServedAndUnserved {
        id: ActivityId,
    },
    /// Activity is neither routed nor unserved.
    Unaccounted {
        id: ActivityId,
    },
    UnknownActivity {
        id: ActivityId,
    },
    UnknownVehicle {
        id: VehicleId,
    },
    /// Vehicle has more than one route (depot leave/return once).
    DuplicateVehicle {
        id: VehicleId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVisit { id } => write!(f, "duplicate-visit: activity {id}"),
            Violation::ServedAndUnserved { id } => write!(f, "served-and-unserved: activity {id}"),
            Violation::Unaccounted { id } => write!(f, "unaccounted: activity {id}"),
            Violation::UnknownActivity { id } => write!(f, "unknown-activity: {id}"),
            Violation::UnknownVehicle { id } => write!(f, "unknown-vehicle: {id}"),
            Violation::DuplicateVehicle { id } => write!(f, "duplicate-vehicle: {id}"),
        }
    }
}

/// Lists every violated visit / flow / index constraint. Leaving an activity
/// unserved is not a violation.
pub fn check_hard_feasibility(instance: &Instance, plan: &Plan) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut visits: HashMap<ActivityId, usize> = HashMap::new();
    let mut vehicles = HashSet::new();
    for route in &plan.routes {
        if instance.vehicle(route.vehicle_id).is_none() {
            out.push(Violation::UnknownVehicle { id: route.vehicle_id });
        } else if !vehicles.insert(route.vehicle_id) {
            out.push(Violation::DuplicateVehicle { id: route.vehicle_id });
        }
        for &id in &route.stops {
            if instance.position(id).is_none() {
                out.push(Violation::UnknownActivity { id });
            }
            let count = visits.entry(id).or_default();
            *count += 1;
            if *count == 2 {
                out.push(Violation::DuplicateVisit { id });
            }
        }
    }
    for &id in &plan.unserved {
        if instance.position(id).is_none() {
            out.push(Violation::UnknownActivity { id });
        } else if visits.contains_key(&id) {
            out.push(Violation::ServedAndUnserved { id });
        }
    }
    for a in &instance.activities {
        if !visits.contains_key(&a.id) && !plan.unserved.contains(&a.id) {
            out.push(Violation::Unaccounted { id: a.id });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::super::*;
    use super::*;

    fn inst() -> Instance {
        line_instance(
            &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            vec![Vehicle::new(1, 100.0, 0.05), Vehicle::new(2, 100.0, 0.05)],
        )
    }

    fn plan(routes: Vec<(VehicleId, Vec<ActivityId>)>, unserved: &[ActivityId]) -> Plan {
        Plan {
            routes: routes
                .into_iter()
                .map(|(vehicle_id, stops)| Route {
                    vehicle_id,
                    stops,
                    start_times: vec![],
                })
                .collect(),
            unserved: unserved.iter().copied().collect(),
            objectives: ObjectiveVector::default(),
        }
    }

    #[test]
    fn duplicate_visit_is_reported() {
        let p = plan(vec![(1, vec![1, 3]), (2, vec![2, 3, 4, 5])], &[]);
        assert_eq!(
            check_hard_feasibility(&inst(), &p),
            vec![Violation::DuplicateVisit { id: 3 }]
        );
    }

    #[test]
    fn full_cover_is_clean() {
        let p = plan(vec![(1, vec![1, 2]), (2, vec![3, 4, 5])], &[]);
        assert!(check_hard_feasibility(&inst(), &p).is_empty());
    }

    #[test]
    fn unserved_is_allowed() {
        let p = plan(vec![(1, vec![1, 2]), (2, vec![3, 4])], &[5]);
        assert!(check_hard_feasibility(&inst(), &p).is_empty());
    }

    #[test]
    fn other_violations() {
        let p = plan(vec![(1, vec![1, 9]), (1, vec![2]), (3, vec![])], &[2]);
        let v = check_hard_feasibility(&inst(), &p);
        assert!(v.contains(&Violation::UnknownActivity { id: 9 }));
        assert!(v.contains(&Violation::DuplicateVehicle { id: 1 }));
        assert!(v.contains(&Violation::UnknownVehicle { id: 3 }));
        assert!(v.contains(&Violation::ServedAndUnserved { id: 2 }));
        assert!(v.contains(&Violation::Unaccounted { id: 3 }));
    }
}
