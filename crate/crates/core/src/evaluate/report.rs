//! Report files: one KPI CSV per strategy, a monthly summary and a manifest.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::compare::StrategyReport;
use crate::error::Result;

#[derive(Serialize)]
struct DayRow {
    day: NaiveDate,
    activities: usize,
    operators_used: f64,
    completion_rate: f64,
    utilization: f64,
    overtime: f64,
    tardiness: f64,
    travel: f64,
    gap_overtime: f64,
    gap_tardiness: f64,
    duration_mae: f64,
}

#[derive(Serialize)]
struct MonthRow<'a> {
    strategy: &'a str,
    days: usize,
    operators_used: f64,
    completion_rate: f64,
    utilization: f64,
    overtime: f64,
    tardiness: f64,
    travel: f64,
    gap_overtime: f64,
    gap_tardiness: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `kpi_<strategy>.csv` files and `monthly_summary.csv` into `dir`;
/// returns the written paths in order.
pub fn write_reports(dir: &Path, reports: &[StrategyReport]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for rep in reports {
        let path = dir.join(format!("kpi_{}.csv", rep.strategy));
        let mut w = csv::Writer::from_path(&path)?;
        for d in &rep.days {
            let k = &d.kpi;
            w.serialize(DayRow {
                day: d.date,
                activities: d.activities,
                operators_used: k.operators_used,
                completion_rate: k.completion_rate,
                utilization: k.utilization,
                overtime: k.overtime,
                tardiness: k.tardiness,
                travel: k.travel,
                gap_overtime: k.gap_overtime,
                gap_tardiness: k.gap_tardiness,
                duration_mae: d.duration_mae,
            })?;
        }
        w.flush()?;
        written.push(path);
    }
    let path = dir.join("monthly_summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for rep in reports {
        let k = &rep.monthly;
        w.serialize(MonthRow {
            strategy: rep.strategy.name(),
            days: rep.days.len(),
            operators_used: k.operators_used,
            completion_rate: k.completion_rate,
            utilization: k.utilization,
            overtime: k.overtime,
            tardiness: k.tardiness,
            travel: k.travel,
            gap_overtime: k.gap_overtime,
            gap_tardiness: k.gap_tardiness,
        })?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

/// Checksums of files, by file name, for manifests.
pub fn file_digests(paths: &[PathBuf]) -> Result<Vec<(String, String)>> {
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, sha256_hex(&std::fs::read(p)?)))
        })
        .collect()
}
