//! Experiment driver for `enclosure-core`: JSON configuration, mesh files,
//! CSV/JSON/SVG outputs and the parallel sweeps behind the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod meshio;
pub mod output;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiment::RunOptions;
