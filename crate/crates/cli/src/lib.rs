//! Library side of the `aglink` command: scenario files, result CSVs and
//! the experiment commands.

pub mod commands;
pub mod error;
pub mod results;
pub mod scenario_file;

pub use error::{CliError, Result};
