//! Experiment harness for permuted parallel compressed sensing.
//!
//! Every command is a pure function of its configuration and input files;
//! only the video timing table carries wall-clock values.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Command};
pub use config::{ConfigError, RunConfig};
pub use output::{Report, Table};
