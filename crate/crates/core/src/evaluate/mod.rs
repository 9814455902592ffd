//! Planning-strategy evaluation: duration inputs, plan replay, KPIs and
//! month-level comparison reports.

mod compare;
mod replay;
mod report;
mod strategy;

pub use compare::{
    build_days, mean_kpi, run_comparison, synthetic_month, ComparisonSetup, Day, DayResult, StrategyReport,
};
pub use replay::{compute_kpis, recommend, replay, DayKpi, ExecutedPlan};
pub use report::{file_digests, sha256_hex, write_reports};
pub use strategy::{parse_strategies, resolve_durations, DurationStrategy, StrategyContext};
