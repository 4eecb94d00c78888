//! Configuration, subcommand dispatch and report emission for the `qpv` tool.

pub mod config;
pub mod error;
pub mod report;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use report::{emit_report, run_command, Command, Format, Report, Results};
