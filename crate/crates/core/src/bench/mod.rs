//! Timing harness, report bundle and plot data.

pub mod config;
pub mod env;
pub mod memory;
pub mod runner;
pub mod timing;

pub use config::{BenchConfig, ModelRef, RunMode};
pub use env::Environment;
pub use runner::{run_bench, run_model, BenchOutcome, ModelError};
pub use timing::{render_plot_data, render_timing_table, time_run, PlotData, RunStatus, TimingRecord, TimingTable};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("another benchmark run holds the timing lock")]
    LockContention,
    #[error("duplicate timing record for {model} / {period}")]
    DuplicateRecord { model: String, period: String },
    #[error("quality models {quality:?} differ from timing models {timing:?}")]
    ModelSetMismatch { quality: Vec<String>, timing: Vec<String> },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(String),
}
