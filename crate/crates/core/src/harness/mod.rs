//! Seeded Monte-Carlo sweeps over `(p, L, delta)` writing long-format CSV.

pub mod config;
pub mod runner;
pub mod summary;

pub use config::{DRule, ExperimentConfig, LambdaRule, Method, ScoreMode, SweepPoint};
pub use runner::{csv_body, run_experiment, run_trial, write_csv, write_csv_file, TrialMetrics, TrialRecord, TrialStatus, CSV_HEADER};
pub use summary::{gnuplot_script, log_error_slope, ols_slope, summarize, write_summary, MeanStd, PointSummary, SlopeFit, SweepAxis};
