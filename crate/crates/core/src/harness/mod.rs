//! Experiment orchestration: configuration, pipelines, persistence and report files.

pub mod config;
pub mod experiment;
pub mod files;
pub mod persist;

pub use config::{experiment_network, ExperimentConfig, PredictionConfig, RecognitionConfig};
pub use experiment::{reproduce_experiment, reproduce_with, write_report, Check, Experiment, ExperimentReport, Thresholds};
pub use persist::{load_state, save_state};
