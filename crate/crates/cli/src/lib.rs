//! Front end of the `mintime` binary: configuration, commands and exit codes.

pub mod config;
pub mod error;
pub mod run;

pub use config::{RawConfig, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{cmd_report, cmd_shoot, cmd_solve, cmd_verify, Check, Outcome};
