//! Monte Carlo driver for the RIS max-min optimizers: configuration files,
//! seeded paired trials across methods and sweep grids, and CSV output.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::{
    load_config, parse_config, serialize_config, ExperimentConfig, ExperimentPlan, MethodFamily,
};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, trial_channel, write_csv, TrialRecord, CSV_HEADER};
