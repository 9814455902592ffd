//! Duration forecasting: feature encoding, a histogram gradient-boosted tree
//! learner, the four model architectures (standard, weighted, dual,
//! dual-weighted), accuracy metrics and the date-split training pipeline.

mod architecture;
mod features;
mod gbt;
mod metrics;
mod pipeline;
mod split;

pub use architecture::{
    class_weights, fit_architecture, fit_architecture_traced, Component, ForecastModel, Role, Variant,
    MODEL_FORMAT_VERSION,
};
pub use features::{
    cyclical, Attributes, FeatureEncoder, FeatureVector, TrainingRecord, FEATURE_NAMES, N_FEATURES, UNKNOWN_CATEGORY,
};
pub use gbt::{fit_gbt, Ensemble, FitTrace, Hyperparams, Node, Tree};
pub use metrics::{evaluate_metrics, write_metrics_csv, MetricsEntry, MetricsRow};
pub use pipeline::{grid_search, split_metrics, train, Grid, GridPoint, TrainConfig, TrainOutcome};
pub use split::{split_by_date, DateSplit};
