//! Experiment orchestration for WGN-based link capacity measurements:
//! config files, sweeps over distance, launch power or SNR, the 16QAM
//! reference, channel characterization, CSV tables and SVG plots.

pub mod characterize;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;

pub use characterize::{characterize, CharacterizeReport};
pub use config::{parse_config, validate_config, ConfigError, ExperimentConfig, Overrides, SweepAxis};
pub use experiment::{run_experiment, run_reference_16qam, ExperimentReport, Failure, RunError};

/// Process exit status.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CONFIG_ERROR: u8 = 1;
    pub const RUNTIME_FAILURE: u8 = 2;
}
