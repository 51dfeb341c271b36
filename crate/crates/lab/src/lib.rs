//! Experiment driver for `nbrw-core`: TOML configs, the five experiment
//! commands and CSV/JSON result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod table;

pub use commands::{run, write_outputs, CommandOutput};
pub use config::{CommandKind, ExperimentConfig, OutputFormat};
pub use error::{LabError, Result};
