//! Config-driven experiment runner for the hierarchical game solvers.
//!
//! An [`ExperimentSpec`] names a game, one or more solvers, the seed list,
//! a budget and an optional sweep. [`run_experiment`] executes every
//! (sweep point, seed) pair and aggregates final residuals; the `output`
//! module turns the result into CSV, Markdown and plot data.

pub mod error;
pub mod output;
pub mod runner;
pub mod spec;

pub use error::{BenchError, Result};
pub use output::{aggregate_csv, emit_csv, markdown_tables, read_csv, write_outputs, CsvRow};
pub use runner::{run_experiment, AggregateRow, ExperimentOutput, RunOptions, RunResult};
pub use spec::ExperimentSpec;
