//! Experiment driver for the teleportation simulator: configuration,
//! runners for each experiment and plot-ready result tables.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{
    ConfigOverrides, Experiment, ExperimentConfig, GainSweep, Gains, InputDescriptor, OutputFormat,
};
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_TOLERANCE};
pub use experiments::{
    config_from_metadata, equivalence_cases, run, run_equivalence_suite, run_gain_sweep,
    run_sample, run_single_photon, run_vacuum_intensity, EquivalenceCase, RunReport,
};
pub use table::ResultTable;
