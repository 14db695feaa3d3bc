//! Sweeps, evolution runs, statistical comparisons and their CSV/JSON output.

pub mod compare;
pub mod evolution;
pub mod records;
pub mod stats;
pub mod sweep;

pub use compare::{compare, select_best, ComparisonReport, MetricComparison, Selection, TestKind};
pub use evolution::{run_evolution_experiment, write_generation_best, write_run_log, RunOutcome};
pub use records::{read_records_csv, write_records_csv, EvalRecord, Source, Subject};
pub use stats::{one_sample_t_test, student_t_cdf, Alternative, TTest};
pub use sweep::{evaluate_network, run_sweep, run_sweep_with, SweepConfig};
