//! Experiment harness around `hexevo-core`: JSON configs with run IDs, a
//! rayon worker pool, run-directory pipelines and their file formats.

pub mod cli;
pub mod config;
pub mod evaluator;
pub mod formats;
pub mod run;

pub use config::{ExperimentConfig, RunIdentity};
pub use evaluator::RayonEvaluator;
