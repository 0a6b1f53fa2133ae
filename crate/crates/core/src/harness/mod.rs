//! Experiment runner: configuration, seeded sweeps over policies, output
//! files, and aggregation.

mod config;
mod demo;
mod report;
mod run;

pub use config::{ExperimentKind, RegretParams, RunConfig, Starts, Weighting};
pub use demo::{mts_demo, DemoOutput, DEMO_COSTS};
pub use report::{aggregate, report, Report, ReportRow, Stat};
pub use run::{cell_file_name, load_summary, run, run_cell, CellSummary, RunSummary, SeedSetup, STEP_HEADER};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "GPMD_WORKERS";
