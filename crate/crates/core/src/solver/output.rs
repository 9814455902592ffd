//! Pareto-set and convergence-log files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConvergenceRow;
use crate::error::Result;
use crate::model::{ObjectiveVector, Plan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoIndexEntry {
    pub file: String,
    pub objectives: ObjectiveVector,
    pub penalty: f64,
}

/// Writes `plan_NNN.json` per plan plus `index.json` into `dir`.
pub fn write_pareto_set(dir: &Path, plans: &[Plan], penalties: &[f64]) -> Result<Vec<ParetoIndexEntry>> {
    std::fs::create_dir_all(dir)?;
    let mut index = Vec::with_capacity(plans.len());
    for (i, (plan, &penalty)) in plans.iter().zip(penalties).enumerate() {
        let file = format!("plan_{i:03}.json");
        std::fs::write(dir.join(&file), serde_json::to_string_pretty(plan)?)?;
        index.push(ParetoIndexEntry {
            file,
            objectives: plan.objectives,
            penalty,
        });
    }
    std::fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}

pub fn read_pareto_index(dir: &Path) -> Result<Vec<ParetoIndexEntry>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("index.json"))?)?)
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
