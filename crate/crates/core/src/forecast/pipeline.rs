//! Training pipeline: date split, optional grid search, final fit, metrics
//! and residual calibration of the uncertainty tables.

use serde::{Deserialize, Serialize};

use super::architecture::{fit_architecture, ForecastModel, Variant};
use super::features::TrainingRecord;
use super::gbt::Hyperparams;
use super::metrics::{evaluate_metrics, MetricsEntry, MetricsRow};
use super::split::{split_by_date, DateSplit};
use crate::error::{Error, Result};
use crate::par;
use crate::risk::{conformal_calibrate, estimate_variances, ConformalTable, Residual};

/// Hyperparameter grid searched by validation MAE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 200],
            max_depth: vec![3, 4, 6],
            learning_rate: vec![0.05, 0.1, 0.3],
        }
    }
}

impl Grid {
    /// Grid points in a fixed order (trees, then depth, then learning rate).
    pub fn points(&self, base: &Hyperparams) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &learning_rate in &self.learning_rate {
                    out.push(Hyperparams {
                        n_trees,
                        max_depth,
                        learning_rate,
                        ..*base
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hyperparams: Hyperparams,
    pub validation_mae: f64,
}

fn predict_pairs(model: &ForecastModel, records: &[&TrainingRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .map(|r| (r.duration, model.predict(r.class, &r.attributes)))
        .collect()
}

/// Fits every grid point on `train` and keeps the lowest validation MAE
/// (first in grid order on ties).
pub fn grid_search(
    variant: Variant,
    train: &[TrainingRecord],
    validation: &[&TrainingRecord],
    grid: &Grid,
    base: &Hyperparams,
) -> Result<(Hyperparams, Vec<GridPoint>)> {
    let points = grid.points(base);
    if points.is_empty() {
        return Err(Error::invalid_config("hyperparameter grid is empty"));
    }
    let results = par::map_slice(&points, |_, hp| -> Result<GridPoint> {
        let model = fit_architecture(variant, train, hp)?;
        let m = evaluate_metrics(&predict_pairs(&model, validation))?;
        Ok(GridPoint {
            hyperparams: *hp,
            validation_mae: m.mae,
        })
    });
    let results: Vec<GridPoint> = results.into_iter().collect::<Result<_>>()?;
    let best = results
        .iter()
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.validation_mae <= p.validation_mae => Some(b),
            _ => Some(p),
        })
        .map(|p| p.hyperparams)
        .unwrap_or(*base);
    Ok((best, results))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    pub hyperparams: Hyperparams,
    pub grid: Option<Grid>,
    pub split_seed: u64,
    pub ratios: [f64; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::DualWeighted,
            hyperparams: Hyperparams::default(),
            grid: None,
            split_seed: 0,
            ratios: [0.8, 0.1, 0.1],
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Final model, carrying the validation variance table.
    pub model: ForecastModel,
    pub conformal: ConformalTable,
    pub metrics: Vec<MetricsRow>,
    pub split: DateSplit,
    pub grid: Vec<GridPoint>,
}

/// Metrics of `model` on the train/validation/test parts of `records`.
pub fn split_metrics(model: &ForecastModel, records: &[TrainingRecord], split: &DateSplit) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for (set, idx) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        let part: Vec<&TrainingRecord> = idx.iter().map(|&i| &records[i]).collect();
        let metrics: MetricsEntry = evaluate_metrics(&predict_pairs(model, &part))?;
        rows.push(MetricsRow {
            model: model.variant.to_string(),
            set: set.to_string(),
            metrics,
        });
    }
    Ok(rows)
}

pub fn train(records: &[TrainingRecord], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let split = split_by_date(records, TrainingRecord::date, cfg.ratios, cfg.split_seed)?;
    let train_set: Vec<TrainingRecord> = split.train.iter().map(|&i| records[i].clone()).collect();
    let validation: Vec<&TrainingRecord> = split.validation.iter().map(|&i| &records[i]).collect();

    let (hp, grid) = match &cfg.grid {
        Some(g) => grid_search(cfg.variant, &train_set, &validation, g, &cfg.hyperparams)?,
        None => (cfg.hyperparams, Vec::new()),
    };
    let mut model = fit_architecture(cfg.variant, &train_set, &hp)?;

    let residuals: Vec<Residual> = validation
        .iter()
        .map(|r| Residual::new(r.class, r.duration, model.predict(r.class, &r.attributes)))
        .collect();
    model.variance_table = Some(estimate_variances(&residuals)?);
    let conformal = conformal_calibrate(&residuals)?;
    let metrics = split_metrics(&model, records, &split)?;
    Ok(TrainOutcome {
        model,
        conformal,
        metrics,
        split,
        grid,
    })
}
