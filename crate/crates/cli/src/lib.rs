//! Library side of `linfctl`: configuration, commands and error mapping.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{compare, probe, simulate, synthesize, DesignArtifact};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
