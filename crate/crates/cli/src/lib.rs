//! Library half of the `qsd` command-line tool: argument types, file
//! formats, and the four subcommands.

pub mod bench;
pub mod dilate;
pub mod error;
pub mod files;
pub mod simulate;
pub mod solve;

pub use error::{CliError, CliResult};
