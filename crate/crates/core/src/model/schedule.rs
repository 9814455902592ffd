use std::collections::HashSet;

use super::{ActivityId, Instance, ObjectiveVector, Route, Vehicle};
use crate::error::{Error, Result};

/// Aggregates of one route under a duration assignment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RouteStats {
    pub travel_time: f64,
    pub travel_cost: f64,
    pub service: f64,
    pub waiting: f64,
    pub tardiness: f64,
    /// T_{n+1,k} - T_{0k}; zero for an empty route.
    pub duration: f64,
    pub overtime: f64,
}

impl RouteStats {
    /// Forward recursion `T_j = max(a_j, T_i + s_i + t_ij)` over a stop
    /// sequence given as activity positions.
    pub fn compute(instance: &Instance, vehicle: &Vehicle, stops: &[usize], durations: &[f64]) -> RouteStats {
        Self::walk(instance, vehicle, stops, durations, |_, _| {})
    }

    pub(crate) fn walk(
        instance: &Instance,
        vehicle: &Vehicle,
        stops: &[usize],
        durations: &[f64],
        mut on_start: impl FnMut(usize, f64),
    ) -> RouteStats {
        let mut stats = RouteStats::default();
        if stops.is_empty() {
            return stats;
        }
        let mut node = instance.depot;
        let mut clock = vehicle.shift_start;
        let mut ready = clock;
        for (k, &pos) in stops.iter().enumerate() {
            let act = &instance.activities[pos];
            let next = act.location;
            let t = instance.time_between(node, next);
            stats.travel_time += t;
            stats.travel_cost += instance.cost_between(node, next);
            let arrival = ready + t;
            let start = arrival.max(act.window_open);
            stats.waiting += start - arrival;
            stats.tardiness += (start - act.window_close).max(0.0);
            on_start(k, start);
            let s = durations[pos];
            stats.service += s;
            clock = start + s;
            ready = clock;
            node = next;
        }
        stats.travel_time += instance.time_between(node, instance.depot);
        stats.travel_cost += instance.cost_between(node, instance.depot);
        let back = clock + instance.time_between(node, instance.depot);
        stats.duration = back - vehicle.shift_start;
        stats.overtime = (stats.duration - vehicle.shift_length).max(0.0);
        stats
    }
}

/// Computes earliest-feasible start times for `stops` on `vehicle`.
///
/// Waiting is inserted when a stop is reached before its window opens;
/// late starts are allowed and surface as tardiness.
pub fn propagate_schedule(
    instance: &Instance,
    vehicle: &Vehicle,
    stops: &[ActivityId],
    durations: &[f64],
) -> Result<Route> {
    let positions = instance.positions_of(stops)?;
    let mut seen = HashSet::with_capacity(positions.len());
    if let Some(dup) = stops.iter().find(|id| !seen.insert(**id)) {
        return Err(Error::invalid_input(format!("activity {dup} repeated within a route")));
    }
    if durations.len() < instance.activities.len() {
        return Err(Error::invalid_input("duration table does not cover every activity"));
    }
    let mut start_times = vec![0.0; positions.len()];
    RouteStats::walk(instance, vehicle, &positions, durations, |k, t| start_times[k] = t);
    Ok(Route {
        vehicle_id: vehicle.id,
        stops: stops.to_vec(),
        start_times,
    })
}

/// Evaluates the objective vector of a route set. Stored start times are
/// ignored; schedules are re-propagated with `durations`.
pub fn evaluate_plan(instance: &Instance, routes: &[Route], durations: &[f64]) -> Result<ObjectiveVector> {
    if durations.len() < instance.activities.len() {
        return Err(Error::invalid_input("duration table does not cover every activity"));
    }
    let mut seen = HashSet::new();
    let mut vehicles = HashSet::new();
    let mut obj = ObjectiveVector::default();
    for route in routes {
        let vehicle = instance
            .vehicle(route.vehicle_id)
            .ok_or_else(|| Error::invalid_input(format!("unknown vehicle id {}", route.vehicle_id)))?;
        if !vehicles.insert(route.vehicle_id) {
            return Err(Error::invalid_plan(format!(
                "vehicle {} has two routes",
                route.vehicle_id
            )));
        }
        for id in &route.stops {
            if !seen.insert(*id) {
                return Err(Error::invalid_plan(format!("activity {id} visited twice")));
            }
        }
        let positions = instance.positions_of(&route.stops)?;
        let stats = RouteStats::compute(instance, vehicle, &positions, durations);
        obj.travel_cost += stats.travel_cost;
        obj.tardiness += stats.tardiness;
        obj.overtime += stats.overtime;
        obj.served += positions.len();
    }
    Ok(obj)
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::super::*;
    use proptest::prelude::*;

    fn two_stop_instance(b: f64) -> Instance {
        // depot -> 1: 10, 1 -> 2: 5, 2 -> depot: 12
        let t = vec![vec![0.0, 10.0, 12.0], vec![10.0, 0.0, 5.0], vec![12.0, 5.0, 0.0]];
        let mut acts = vec![activity(1, 1), activity(2, 2)];
        for a in &mut acts {
            a.window_close = b;
        }
        Instance::new(0, acts, vec![Vehicle::new(7, 480.0, 0.05)], t.clone(), t, 1.0).unwrap()
    }

    #[test]
    fn empty_route_has_zero_duration() {
        let inst = two_stop_instance(100.0);
        let v = &inst.vehicles[0];
        let r = propagate_schedule(&inst, v, &[], &[20.0, 20.0]).unwrap();
        assert!(r.is_empty());
        let s = RouteStats::compute(&inst, v, &[], &[20.0, 20.0]);
        assert_eq!(s.duration, 0.0);
    }

    #[test]
    fn waits_for_window_open() {
        let t = vec![vec![0.0, 80.0], vec![80.0, 0.0]];
        let mut a = activity(1, 1);
        a.window_open = 100.0;
        let inst = Instance::new(0, vec![a], vec![Vehicle::new(1, 480.0, 0.05)], t.clone(), t, 1.0).unwrap();
        let r = propagate_schedule(&inst, &inst.vehicles[0], &[1], &[5.0]).unwrap();
        assert_eq!(r.start_times, vec![100.0]);
        let s = RouteStats::compute(&inst, &inst.vehicles[0], &[0], &[5.0]);
        assert_eq!(s.waiting, 20.0);
    }

    #[test]
    fn two_stop_recursion() {
        let inst = two_stop_instance(30.0);
        let r = propagate_schedule(&inst, &inst.vehicles[0], &[1, 2], &[20.0, 20.0]).unwrap();
        assert_eq!(r.start_times, vec![10.0, 35.0]);
        let obj = evaluate_plan(&inst, &[r], &[20.0, 20.0]).unwrap();
        assert_eq!(obj.tardiness, 5.0);
        assert_eq!(obj.travel_cost, 27.0);
        assert_eq!(obj.served, 2);
    }

    #[test]
    fn unknown_and_repeated_stops_are_rejected() {
        let inst = two_stop_instance(30.0);
        let v = &inst.vehicles[0];
        assert!(matches!(
            propagate_schedule(&inst, v, &[9], &[1.0, 1.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            propagate_schedule(&inst, v, &[1, 1], &[1.0, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn empty_plan_evaluates_to_zero() {
        let inst = two_stop_instance(30.0);
        let obj = evaluate_plan(&inst, &[], &[1.0, 1.0]).unwrap();
        assert_eq!(obj, ObjectiveVector::default());
    }

    #[test]
    fn overtime_boundary() {
        // route duration = 10 + 20 + 5 + 20 + 12 = 67
        let mut inst = two_stop_instance(1000.0);
        inst.vehicles[0].shift_length = 67.0;
        let r = propagate_schedule(&inst, &inst.vehicles[0], &[1, 2], &[20.0, 20.0]).unwrap();
        let obj = evaluate_plan(&inst, std::slice::from_ref(&r), &[20.0, 20.0]).unwrap();
        assert_eq!(obj.overtime, 0.0);
        inst.vehicles[0].shift_length = 60.0;
        let obj = evaluate_plan(&inst, &[r], &[20.0, 20.0]).unwrap();
        assert_eq!(obj.overtime, 7.0);
    }

    #[test]
    fn duplicate_visit_across_routes_is_invalid() {
        let mut inst = two_stop_instance(30.0);
        inst.vehicles.push(Vehicle::new(8, 480.0, 0.05));
        let a = Route {
            vehicle_id: 7,
            stops: vec![1],
            start_times: vec![],
        };
        let b = Route {
            vehicle_id: 8,
            stops: vec![1, 2],
            start_times: vec![],
        };
        assert!(matches!(
            evaluate_plan(&inst, &[a, b], &[1.0, 1.0]),
            Err(Error::InvalidPlan(_))
        ));
    }

    fn random_instance(n: usize, coords: &[(f64, f64)]) -> Instance {
        let pts: Vec<(f64, f64)> = std::iter::once((0.0, 0.0))
            .chain(coords.iter().copied().take(n))
            .collect();
        let m: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| {
                pts.iter()
                    .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                    .collect()
            })
            .collect();
        let acts = (1..pts.len())
            .map(|i| {
                let mut a = activity(i as ActivityId, i);
                a.window_open = (i * 7 % 40) as f64;
                a.window_close = a.window_open + 30.0;
                a
            })
            .collect();
        Instance::new(
            0,
            acts,
            vec![Vehicle::new(1, 200.0, 0.05), Vehicle::new(2, 200.0, 0.05)],
            m.clone(),
            m,
            1.0,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn propagation_is_monotone_in_durations(
            coords in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 6),
            durs in prop::collection::vec(0.0f64..30.0, 6),
            bump_at in 0usize..6,
            bump in 0.0f64..20.0,
        ) {
            let inst = random_instance(6, &coords);
            let ids: Vec<ActivityId> = (1..=6).collect();
            let base = propagate_schedule(&inst, &inst.vehicles[0], &ids, &durs).unwrap();
            let mut more = durs.clone();
            more[bump_at] += bump;
            let after = propagate_schedule(&inst, &inst.vehicles[0], &ids, &more).unwrap();
            for (x, y) in base.start_times.iter().zip(&after.start_times) {
                prop_assert!(y >= x);
            }
        }

        #[test]
        fn travel_cost_is_arc_sum(
            coords in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 6),
            split in 0usize..7,
        ) {
            let inst = random_instance(6, &coords);
            let ids: Vec<ActivityId> = (1..=6).collect();
            let zero = vec![0.0; 6];
            let (a, b) = ids.split_at(split);
            let routes = vec![
                propagate_schedule(&inst, &inst.vehicles[0], a, &zero).unwrap(),
                propagate_schedule(&inst, &inst.vehicles[1], b, &zero).unwrap(),
            ];
            let obj = evaluate_plan(&inst, &routes, &zero).unwrap();
            // independent path summation over node sequences
            let mut expected = 0.0;
            for part in [a, b] {
                if part.is_empty() { continue; }
                let nodes: Vec<usize> = std::iter::once(0).chain(part.iter().map(|&id| id as usize)).chain(std::iter::once(0)).collect();
                expected += nodes.windows(2).map(|w| inst.travel_cost[w[0]][w[1]]).sum::<f64>();
            }
            prop_assert!((obj.travel_cost - expected).abs() < 1e-9);
            prop_assert_eq!(obj.served, 6);

            // route order inside the plan is irrelevant
            let reversed: Vec<Route> = routes.iter().rev().cloned().collect();
            let obj2 = evaluate_plan(&inst, &reversed, &zero).unwrap();
            prop_assert!((obj.travel_cost - obj2.travel_cost).abs() < 1e-9);
            prop_assert_eq!(obj.tardiness, obj2.tardiness);
            prop_assert_eq!(obj.overtime, obj2.overtime);
        }

        #[test]
        fn served_plus_unserved_is_total(
            coords in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 6),
            take in 0usize..7,
        ) {
            let inst = random_instance(6, &coords);
            let ids: Vec<ActivityId> = (1..=take as ActivityId).collect();
            let plan = Plan::build(&inst, &[(1, ids)], &inst.true_durations()).unwrap();
            prop_assert_eq!(plan.objectives.served + plan.unserved.len(), 6);
        }
    }
}
