//! Config-driven experiment runs and their on-disk artifacts.

pub mod config;
pub mod run;
pub mod trace_csv;

pub use config::{ExperimentConfig, ProblemConfig};
pub use run::{
    run_experiment, RunOutcome, Summary, Task, EXIT_BOUND_VIOLATION, EXIT_ERROR, EXIT_OK,
};
pub use trace_csv::{emit_trace_csv, parse_trace_csv, write_trace_csv, TraceRow, TRACE_HEADER};
