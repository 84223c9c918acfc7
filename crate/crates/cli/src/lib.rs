//! Config-driven front end for `parisi-core`: parses a run configuration,
//! dispatches to one module operation and emits `key=value` records and CSV grids.

pub mod commands;
pub mod config;
pub mod record;

pub use commands::{compare, run, Command, Output, RunError};
pub use config::{digest, ConfigError, RunConfig};
pub use record::{parse_records, records_to_text, ResultRecord};
