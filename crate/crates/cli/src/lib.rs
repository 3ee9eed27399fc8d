//! Scenario runner behind the `fluctua` binary.
//!
//! A run is a [`ScenarioConfig`] in, a CSV table plus a JSON summary out.
//! Sweeps fan a template over parameter grids on a bounded rayon pool.

pub mod check;
pub mod config;
pub mod error;
pub mod scenario;
pub mod sweep;

pub use check::{run_suite, Check, Suite};
pub use config::{Grid, Resolved, Scenario, ScenarioConfig};
pub use error::CliError;
pub use scenario::{run_config, RunOutput, Summary};
pub use sweep::{sweep, Axis, SweepResult};
