//! Command-line driver for the fleet simulator: scenario files in, reports,
//! tables and traces out.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;
pub mod scenario_file;

pub use commands::{compare, simulate, sweep, write_outputs, Output, RunConfig};
pub use error::{CliError, Result};
pub use format::{render, Format};
pub use scenario_file::{echo, parse_scenario, parse_scenario_str, LoadedScenario};
