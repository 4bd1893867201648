//! Experiment harness: config ingestion, seeded Monte Carlo execution and
//! result serialization. The config document format and the CSV/JSON row
//! schemas here are the crate's stable external contracts.

mod config;
mod experiment;
mod results;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, RunSummary};
pub use results::{
    read_results_csv, read_results_json, rows_to_csv, rows_to_json, write_results, OutputFormat,
    ResultRow, CSV_HEADER,
};
