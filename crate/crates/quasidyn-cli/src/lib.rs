//! Command-line front end for the quasidyn checks.

pub mod config;
pub mod error;
pub mod report;
pub mod scenario;

pub use config::{Overrides, ScenarioConfig};
pub use error::{CliError, Result};
pub use report::{DefectReport, Format};
pub use scenario::run_scenario;
