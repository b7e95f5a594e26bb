//! Scenario files, built-in experiments and the runner behind the `coopmpc`
//! command-line tool.

pub mod output;
pub mod runner;
pub mod scenario;

pub use runner::{perturbed_warm_start, run_scenario, CliError, RunHeader, RunOptions, RunOutcome};
pub use scenario::{builtin, load_scenario, resolve_scenario, ScenarioConfig, BUILTIN_NAMES};
