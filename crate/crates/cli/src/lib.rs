//! Library side of the `kop` command: the system document format and the
//! command implementations, kept out of `main` so they can be tested
//! in-process.

pub mod app;
pub mod document;

pub use app::{run, Cli, CliError, ExitStatus, Output};
