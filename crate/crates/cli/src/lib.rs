//! Run configuration and sweep execution for the squeezed-bath simulator, with CSV output.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, Result};
