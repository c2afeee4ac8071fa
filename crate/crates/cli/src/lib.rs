//! Batch front-end for trilayer Kirigami studies: TOML configs, analytic
//! reports, parameter sweeps, inverse design, simulation and snap-through.

pub mod commands;
pub mod config;

pub use commands::{run_analyze, run_design, run_simulate, run_snap, run_sweep, CliError};
pub use config::StudyConfig;
