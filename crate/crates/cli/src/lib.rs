//! Experiment harness: configuration, seeded multi-run orchestration, and
//! table emission for the staged-training toolkit.

pub mod experiment;
pub mod presets;
pub mod report;

pub use experiment::{
    cluster_sweep, layer_sweep, load_dataset, run_experiment, ExperimentConfig, ExperimentReport,
    Method,
};
pub use report::{emit_table, write_table, TableFormat};
