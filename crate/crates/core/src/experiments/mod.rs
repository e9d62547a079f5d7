//! Configured experiments: convergence sweeps, commutator and correlation
//! bound checks, hierarchy residuals and bound tables.

pub mod config;
pub mod fit;
pub mod output;
pub mod runner;

pub use config::{load_config, load_config_file, ExperimentConfig, Scenario};
pub use output::{Table, ARTIFACT_VERSION};
pub use runner::run;
