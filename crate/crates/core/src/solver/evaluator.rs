//! Route scoring under planning durations and the risk-buffer penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActivityClass, Instance, ObjectiveVector, Plan, RouteStats, Vehicle};
use crate::risk::{buffer_from_total, conformal_route_bound, ConformalTable};

/// Planning-time duration of one activity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DurationEstimate {
    pub mu: f64,
    /// Proxy variance of the estimate's residual.
    pub sigma2: f64,
}

impl DurationEstimate {
    pub fn exact(mu: f64) -> Self {
        Self { mu, sigma2: 0.0 }
    }
}

/// How a route's safety reserve is sized.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BufferRule {
    /// `sqrt(2 * sum sigma2 * ln(1/alpha))`.
    #[default]
    SubGaussian,
    /// Bonferroni sum of per-stop conformal upper widths.
    Conformal { table: ConformalTable },
    /// No reserve.
    None,
}

/// Cached evaluation of one route.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RouteEval {
    pub stats: RouteStats,
    pub mu_sum: f64,
    pub var_sum: f64,
    pub buffer: f64,
    pub penalty: f64,
}

/// Pure evaluation context shared by all individuals of a solve.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    pub instance: &'a Instance,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub classes: Vec<ActivityClass>,
    /// Risk level per vehicle index.
    pub alpha: Vec<f64>,
    pub rule: &'a BufferRule,
}

impl<'a> Evaluator<'a> {
    /// `alpha` overrides every vehicle's own risk level when given.
    pub fn new(
        instance: &'a Instance,
        estimates: &[DurationEstimate],
        rule: &'a BufferRule,
        alpha: Option<f64>,
    ) -> Result<Self> {
        if estimates.len() != instance.activities.len() {
            return Err(Error::invalid_input(format!(
                "{} duration estimates for {} activities",
                estimates.len(),
                instance.activities.len()
            )));
        }
        if let Some((i, _)) = estimates
            .iter()
            .enumerate()
            .find(|(_, e)| !(e.mu.is_finite() && e.mu >= 0.0 && e.sigma2.is_finite() && e.sigma2 >= 0.0))
        {
            return Err(Error::invalid_input(format!(
                "estimate for activity position {i} is invalid"
            )));
        }
        if let Some(a) = alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid_config(format!("risk level must be in (0,1), got {a}")));
            }
        }
        let classes: Vec<ActivityClass> = instance.activities.iter().map(|a| a.class).collect();
        if let BufferRule::Conformal { table } = rule {
            for &c in &classes {
                table.upper_width(c, 0.5).map_err(|e| e.context("conformal buffer"))?;
            }
        }
        Ok(Self {
            instance,
            mu: estimates.iter().map(|e| e.mu).collect(),
            sigma2: estimates.iter().map(|e| e.sigma2).collect(),
            classes,
            alpha: instance
                .vehicles
                .iter()
                .map(|v| alpha.unwrap_or(v.risk_level))
                .collect(),
            rule,
        })
    }

    pub fn vehicle(&self, k: usize) -> &Vehicle {
        &self.instance.vehicles[k]
    }

    pub fn lambda(&self) -> f64 {
        self.instance.lambda
    }

    /// Reserve for a route given as positions on vehicle index `k`.
    pub fn buffer(&self, k: usize, stops: &[usize], var_sum: f64) -> f64 {
        if stops.is_empty() {
            return 0.0;
        }
        // Inputs were validated in `new`, so these cannot fail.
        match self.rule {
            BufferRule::SubGaussian => buffer_from_total(var_sum, self.alpha[k]).unwrap_or(f64::INFINITY),
            BufferRule::Conformal { table } => {
                let classes: Vec<ActivityClass> = stops.iter().map(|&p| self.classes[p]).collect();
                conformal_route_bound(table, &classes, self.alpha[k]).unwrap_or(f64::INFINITY)
            }
            BufferRule::None => 0.0,
        }
    }

    pub fn eval_route(&self, k: usize, stops: &[usize]) -> RouteEval {
        let vehicle = self.vehicle(k);
        let stats = RouteStats::compute(self.instance, vehicle, stops, &self.mu);
        let var_sum: f64 = stops.iter().map(|&p| self.sigma2[p]).sum();
        let buffer = self.buffer(k, stops, var_sum);
        let penalty = if stops.is_empty() {
            0.0
        } else {
            (stats.service + stats.travel_time + buffer - vehicle.shift_length).max(0.0)
        };
        RouteEval {
            stats,
            mu_sum: stats.service,
            var_sum,
            buffer,
            penalty,
        }
    }

    /// Local-search score: travel + lambda * tardiness + penalty.
    pub fn score(&self, e: &RouteEval) -> f64 {
        e.stats.travel_cost + self.lambda() * e.stats.tardiness + e.penalty
    }

    pub fn objectives(&self, routes: &[Vec<usize>], evals: &[RouteEval]) -> (ObjectiveVector, f64) {
        let mut obj = ObjectiveVector::default();
        let mut penalty = 0.0;
        for (stops, e) in routes.iter().zip(evals) {
            obj.travel_cost += e.stats.travel_cost;
            obj.tardiness += e.stats.tardiness;
            obj.overtime += e.stats.overtime;
            obj.served += stops.len();
            penalty += e.penalty;
        }
        (obj, penalty)
    }

    pub fn vehicle_index(&self, id: u32) -> Option<usize> {
        self.instance.vehicles.iter().position(|v| v.id == id)
    }
}

/// Total buffered shift overrun of a plan, in minutes.
pub fn apply_risk_penalty(
    instance: &Instance,
    plan: &Plan,
    estimates: &[DurationEstimate],
    rule: &BufferRule,
    alpha: Option<f64>,
) -> Result<f64> {
    let ev = Evaluator::new(instance, estimates, rule, alpha)?;
    let mut total = 0.0;
    for route in &plan.routes {
        let k = ev
            .vehicle_index(route.vehicle_id)
            .ok_or_else(|| Error::invalid_plan(format!("unknown vehicle id {}", route.vehicle_id)))?;
        let stops = instance.positions_of(&route.stops)?;
        total += ev.eval_route(k, &stops).penalty;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::testkit::line_instance;
    use crate::model::Vehicle;
    use crate::risk::check_route_chance_feasible;

    fn setup(h: f64) -> Instance {
        line_instance(&[0.0, 10.0, 20.0, 30.0], vec![Vehicle::new(1, h, 0.05)])
    }

    fn est(mu: f64, s2: f64) -> Vec<DurationEstimate> {
        vec![DurationEstimate { mu, sigma2: s2 }; 3]
    }

    fn plan(inst: &Instance, stops: Vec<u32>, e: &[DurationEstimate]) -> Plan {
        let mu: Vec<f64> = e.iter().map(|x| x.mu).collect();
        Plan::build(inst, &[(1, stops)], &mu).unwrap()
    }

    #[test]
    fn zero_variance_fit_is_free() {
        // travel 60 + service 60 = 120 <= 120
        let inst = setup(120.0);
        let e = est(20.0, 0.0);
        let p = plan(&inst, vec![1, 2, 3], &e);
        assert_eq!(
            apply_risk_penalty(&inst, &p, &e, &BufferRule::SubGaussian, None).unwrap(),
            0.0
        );
    }

    #[test]
    fn overrun_is_at_least_the_gap() {
        let inst = setup(110.0);
        let e = est(20.0, 4.0);
        let p = plan(&inst, vec![1, 2, 3], &e);
        let pen = apply_risk_penalty(&inst, &p, &e, &BufferRule::SubGaussian, None).unwrap();
        assert!(pen >= 10.0);
        let none = apply_risk_penalty(&inst, &p, &e, &BufferRule::None, None).unwrap();
        assert_eq!(none, 10.0);
    }

    #[test]
    fn matches_chance_check_slack() {
        let inst = setup(130.0);
        let e = est(20.0, 9.0);
        let p = plan(&inst, vec![1, 2, 3], &e);
        let pen = apply_risk_penalty(&inst, &p, &e, &BufferRule::SubGaussian, None).unwrap();
        let chk = check_route_chance_feasible(60.0, 60.0, &[9.0; 3], 0.05, 130.0).unwrap();
        assert!(!chk.feasible);
        assert!((pen + chk.slack).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_estimates() {
        let inst = setup(100.0);
        assert!(Evaluator::new(&inst, &est(1.0, 0.0)[..2], &BufferRule::SubGaussian, None).is_err());
        assert!(Evaluator::new(&inst, &est(1.0, -1.0), &BufferRule::SubGaussian, None).is_err());
        assert!(Evaluator::new(&inst, &est(1.0, 0.0), &BufferRule::SubGaussian, Some(1.5)).is_err());
    }

    proptest! {
        #[test]
        fn larger_alpha_never_raises_penalty(s2 in 0.0f64..200.0, h in 60.0f64..200.0, a in 0.01f64..0.5) {
            let inst = setup(h);
            let e = est(20.0, s2);
            let p = plan(&inst, vec![1, 2, 3], &e);
            let tight = apply_risk_penalty(&inst, &p, &e, &BufferRule::SubGaussian, Some(a)).unwrap();
            let loose = apply_risk_penalty(&inst, &p, &e, &BufferRule::SubGaussian, Some((a * 2.0).min(0.99))).unwrap();
            prop_assert!(loose <= tight + 1e-12);
        }
    }
}
