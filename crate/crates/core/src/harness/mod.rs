//! Experiment driver, CSV formats and error-order fitting.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, Ladder, Scenario, OUT_DIR_ENV};
pub use experiments::{bs_fixture, run_experiment, run_to_file, Check, ExperimentOutcome};
pub use report::{
    fit_error_order, read_report, read_surface, write_report, write_surface, ConvergenceRow, DecayVerdict, ErrorFit,
};
