//! Monte-Carlo experiments for the joint 1-bit precoder / BD-IRS optimizer:
//! TOML configuration, parallel seeded runs and deterministic CSV/JSON output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{parse_seed_range, ExperimentConfig};
pub use error::{Result, SimError};
pub use experiment::{
    build_link, execute, run_convergence_experiment, run_sweep_experiment, ConvergenceResults, Experiment, SweepResults,
};
