//! Scenario runner for the `sclab` library: JSON scenarios in, JSON or CSV
//! reports out.

pub mod error;
pub mod expr;
pub mod registry;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use report::{Check, Comparison, Format, Report};
pub use run::run;
pub use scenario::{load_scenario, parse_scenario, save_scenario, Kind, Scenario};
