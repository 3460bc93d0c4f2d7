//! Runs the lcK verification suites against zoo manifolds and reports the
//! residuals.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{Mode, PartialConfig, Suite, SuiteConfig};
pub use error::CliError;
pub use report::{Report, Status, SuiteReport};
pub use run::{run, RunOptions};
