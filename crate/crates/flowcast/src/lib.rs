//! File formats and the `flowcast` command-line front end over
//! [`flowcast_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod report;

pub use error::CliError;
