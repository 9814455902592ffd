//! Strategy comparison over a sequence of days.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::replay::{compute_kpis, recommend, replay, DayKpi};
use super::strategy::{resolve_durations, DurationStrategy, StrategyContext};
use crate::datagen::{generate_corpus, generate_instance, ActivityClassSpec, FleetSpec, GeneratorConfig};
use crate::error::{Error, Result};
use crate::forecast::TrainingRecord;
use crate::model::Instance;
use crate::solver::{solve, BufferRule, SolverConfig};
use crate::{par, seed};

/// One operational day to plan.
#[derive(Clone, Debug)]
pub struct Day {
    pub date: NaiveDate,
    pub instance: Instance,
}

/// Groups records by date and builds one instance per day. Each day's
/// geometry and windows come from its own derived seed.
pub fn build_days(records: &[TrainingRecord], fleet: &FleetSpec, seed: u64) -> Result<Vec<Day>> {
    let mut by_date: BTreeMap<NaiveDate, Vec<TrainingRecord>> = BTreeMap::new();
    for r in records {
        by_date.entry(r.date()).or_default().push(r.clone());
    }
    let base = seed::stream(seed, "instances");
    let dates: Vec<(NaiveDate, Vec<TrainingRecord>)> = by_date.into_iter().collect();
    par::map_slice(&dates, |d, (date, recs)| {
        let mut rng = seed::rng(seed::derive(base, d as u64));
        Ok(Day {
            date: *date,
            instance: generate_instance(recs, fleet, &mut rng)?,
        })
    })
    .into_iter()
    .collect()
}

/// A synthetic planning month: `generator.n_days` consecutive days.
pub fn synthetic_month(
    generator: &GeneratorConfig,
    specs: &[ActivityClassSpec],
    fleet: &FleetSpec,
) -> Result<Vec<Day>> {
    let records = generate_corpus(generator, specs)?;
    build_days(&records, fleet, generator.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    pub date: NaiveDate,
    pub activities: usize,
    pub kpi: DayKpi,
    /// Mean |planning duration - realized duration| over served stops.
    pub duration_mae: f64,
    pub pareto_size: usize,
    pub generations_run: usize,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: DurationStrategy,
    pub days: Vec<DayResult>,
    /// Arithmetic mean of the daily KPIs.
    pub monthly: DayKpi,
}

#[derive(Clone, Copy, Debug)]
pub struct ComparisonSetup<'a> {
    pub strategies: &'a [DurationStrategy],
    pub context: StrategyContext<'a>,
    pub rule: &'a BufferRule,
    pub solver: &'a SolverConfig,
    pub seed: u64,
}

/// Resolve, solve, pick, replay and score every (day, strategy) cell.
pub fn run_comparison(days: &[Day], setup: &ComparisonSetup<'_>) -> Result<Vec<StrategyReport>> {
    if days.is_empty() {
        return Err(Error::invalid_input("no days to compare"));
    }
    if setup.strategies.is_empty() {
        return Err(Error::invalid_input("no strategies to compare"));
    }
    let ns = setup.strategies.len();
    let cells = par::map_range(days.len() * ns, |c| {
        let (d, s) = (c / ns, setup.strategies[c % ns]);
        run_cell(&days[d], d, s, setup).map_err(|e| e.context(format!("day {} strategy {s}", days[d].date)))
    });
    let cells: Vec<DayResult> = cells.into_iter().collect::<Result<_>>()?;
    Ok(setup
        .strategies
        .iter()
        .enumerate()
        .map(|(si, &strategy)| {
            let days: Vec<DayResult> = cells.iter().skip(si).step_by(ns).cloned().collect();
            let monthly = mean_kpi(days.iter().map(|d| &d.kpi));
            StrategyReport {
                strategy,
                days,
                monthly,
            }
        })
        .collect())
}

fn run_cell(day: &Day, index: usize, strategy: DurationStrategy, setup: &ComparisonSetup<'_>) -> Result<DayResult> {
    let inst = &day.instance;
    let estimates = resolve_durations(strategy, inst, &setup.context)?;
    let config = SolverConfig {
        seed: seed::derive(seed::stream(setup.seed, "solve"), index as u64),
        ..setup.solver.clone()
    };
    let out = solve(inst, &estimates, setup.rule, &config)?;
    let plan = recommend(&out.pareto).ok_or_else(|| Error::consistency("solver returned an empty Pareto set"))?;
    let realized = inst.true_durations();
    let exec = replay(plan, inst, &realized)?;
    let kpi = compute_kpis(&exec, inst)?;
    let mut err = 0.0;
    let mut served = 0usize;
    for r in &plan.routes {
        for p in inst.positions_of(&r.stops)? {
            err += (estimates[p].mu - realized[p]).abs();
            served += 1;
        }
    }
    Ok(DayResult {
        date: day.date,
        activities: inst.activities.len(),
        kpi,
        duration_mae: if served > 0 { err / served as f64 } else { 0.0 },
        pareto_size: out.pareto.len(),
        generations_run: out.generations_run,
        timed_out: out.timed_out,
    })
}

pub fn mean_kpi<'a>(days: impl Iterator<Item = &'a DayKpi>) -> DayKpi {
    let mut n = 0.0;
    let mut acc = DayKpi::default();
    for k in days {
        n += 1.0;
        acc.operators_used += k.operators_used;
        acc.completion_rate += k.completion_rate;
        acc.utilization += k.utilization;
        acc.overtime += k.overtime;
        acc.tardiness += k.tardiness;
        acc.travel += k.travel;
        acc.gap_overtime += k.gap_overtime;
        acc.gap_tardiness += k.gap_tardiness;
    }
    if n > 0.0 {
        for v in [
            &mut acc.operators_used,
            &mut acc.completion_rate,
            &mut acc.utilization,
            &mut acc.overtime,
            &mut acc.tardiness,
            &mut acc.travel,
            &mut acc.gap_overtime,
            &mut acc.gap_tardiness,
        ] {
            *v /= n;
        }
    }
    acc
}
