//! Synthetic intervention corpora and routing instances.

mod corpus;
mod instance;
mod sampling;
mod smoothing;
mod specs;

pub use corpus::{
    generate_corpus, read_corpus, read_corpus_csv, write_corpus, write_corpus_csv, GeneratorConfig, Municipality,
};
pub use instance::{generate_instance, FleetSpec};
pub use sampling::{sample_duration, DrawContext, DurationSampler};
pub use smoothing::{histogram, smooth_peaks, SmoothingParams};
pub use specs::{
    default_class_specs, default_duration_table, lognormal_from_moments, spec_for, validate_specs, ActivityClassSpec,
    Component, DurationShape, METER_CLASS_PROBS,
};
