//! Scenario files, case execution, sweeps and CSV reports.

pub mod config;
pub mod report;
pub mod runner;
pub mod selftest;

pub use config::{parse_config, CheckKind, ConfigError, ScenarioConfig};
pub use report::{to_csv, write_csv, HEADER};
pub use runner::{expand_sweep, parse_sweep_param, run_case, run_sweep, CaseOutcome};
