//! Executing plans against realized durations and the KPIs that result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{propagate_schedule, Instance, ObjectiveVector, Plan, Route, RouteStats};

/// A plan executed with realized durations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutedPlan {
    pub routes: Vec<Route>,
    pub planned: ObjectiveVector,
    pub realized: ObjectiveVector,
    /// Realized service + travel minutes per route (in `routes` order).
    pub busy: Vec<f64>,
    pub total_activities: usize,
}

/// Re-propagates every route with `realized` durations (by activity
/// position), keeping assignments and stop order fixed.
pub fn replay(plan: &Plan, instance: &Instance, realized: &[f64]) -> Result<ExecutedPlan> {
    if realized.len() != instance.activities.len() {
        return Err(Error::invalid_input("realized durations must cover every activity"));
    }
    let mut routes = Vec::with_capacity(plan.routes.len());
    let mut busy = Vec::with_capacity(plan.routes.len());
    let mut obj = ObjectiveVector::default();
    for r in &plan.routes {
        let vehicle = instance
            .vehicle(r.vehicle_id)
            .ok_or_else(|| Error::invalid_plan(format!("unknown vehicle id {}", r.vehicle_id)))?;
        let positions = instance.positions_of(&r.stops)?;
        let stats = RouteStats::compute(instance, vehicle, &positions, realized);
        obj.travel_cost += stats.travel_cost;
        obj.tardiness += stats.tardiness;
        obj.overtime += stats.overtime;
        obj.served += positions.len();
        busy.push(stats.service + stats.travel_time);
        routes.push(propagate_schedule(instance, vehicle, &r.stops, realized)?);
    }
    Ok(ExecutedPlan {
        routes,
        planned: plan.objectives,
        realized: obj,
        busy,
        total_activities: instance.activities.len(),
    })
}

/// KPIs of one executed day.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DayKpi {
    pub operators_used: f64,
    pub completion_rate: f64,
    pub utilization: f64,
    pub overtime: f64,
    pub tardiness: f64,
    pub travel: f64,
    /// |realized - planned| overtime minutes.
    pub gap_overtime: f64,
    /// |realized - planned| tardiness minutes.
    pub gap_tardiness: f64,
}

/// Utilization is busy minutes (capped at each shift) over the shift
/// minutes of the operators that have at least one stop.
pub fn compute_kpis(exec: &ExecutedPlan, instance: &Instance) -> Result<DayKpi> {
    let mut used = 0usize;
    let mut busy = 0.0;
    let mut capacity = 0.0;
    for (r, &b) in exec.routes.iter().zip(&exec.busy) {
        if r.stops.is_empty() {
            continue;
        }
        let h = instance
            .vehicle(r.vehicle_id)
            .ok_or_else(|| Error::invalid_plan(format!("unknown vehicle id {}", r.vehicle_id)))?
            .shift_length;
        used += 1;
        busy += b.min(h);
        capacity += h;
    }
    let served = exec.realized.served;
    if used == 0 && served > 0 {
        return Err(Error::consistency("stops are served but no operator is used"));
    }
    Ok(DayKpi {
        operators_used: used as f64,
        completion_rate: if exec.total_activities == 0 {
            1.0
        } else {
            served as f64 / exec.total_activities as f64
        },
        utilization: if capacity > 0.0 { busy / capacity } else { 0.0 },
        overtime: exec.realized.overtime,
        tardiness: exec.realized.tardiness,
        travel: exec.realized.travel_cost,
        gap_overtime: (exec.realized.overtime - exec.planned.overtime).abs(),
        gap_tardiness: (exec.realized.tardiness - exec.planned.tardiness).abs(),
    })
}

/// Lexicographic plan choice: most served, then least overtime, travel and
/// tardiness. Earlier plans win exact ties.
pub fn recommend(plans: &[Plan]) -> Option<&Plan> {
    plans.iter().min_by(|a, b| {
        let (x, y) = (&a.objectives, &b.objectives);
        y.served
            .cmp(&x.served)
            .then(x.overtime.total_cmp(&y.overtime))
            .then(x.travel_cost.total_cmp(&y.travel_cost))
            .then(x.tardiness.total_cmp(&y.tardiness))
    })
}
