//! Scenario runner behind the `qsource` binary.
//!
//! Each scenario reads an [`ExperimentConfig`], validates it before any
//! block is built, and writes a CSV table plus a TOML summary of pass/fail
//! checks with their margins.

pub mod config;
pub mod report;
mod run;

pub use config::{ExperimentConfig, Params, PomSpec, Scenario};
pub use report::{emit_report, fmt_real, Cell, Check, ReportFiles, Summary, Table};
pub use run::{execute, run, Overrides};
