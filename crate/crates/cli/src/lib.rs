//! Command-line front end and measurement harness.

pub mod app;
pub mod bench;
mod error;
pub mod report;
pub mod verify;


pub use app::{dispatch, main_with_args, run_with_io, Cli, Command};
pub use error::{CliError, CliResult};
