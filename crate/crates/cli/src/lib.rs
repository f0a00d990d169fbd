//! Configuration, sweep execution and result files for `axion-sim`.

pub mod app;
pub mod config;
pub mod emit;
pub mod error;
pub mod plot;
pub mod runner;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::CliError;
pub use runner::{run, ResultRecord};
