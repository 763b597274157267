//! File formats, configuration documents, parallel experiment runners and
//! the command-line frontend built on `clickstat-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod runs;

pub use error::{CliError, Result};
