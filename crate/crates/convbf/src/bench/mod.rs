//! Monte Carlo benchmark harness: configuration, campaign execution, RMSE
//! statistics, and CSV/JSON export.

pub mod config;
pub mod export;
pub mod runner;
pub mod stats;

pub use config::{parse_threshold, ExperimentConfig, FilterKind, SystemKind};
pub use export::{export, export_sweep_csv, to_csv, to_json, Campaign, ExportFormat, JsonReport};
pub use runner::{derive_run_seed, run_experiment, run_experiment_mode, run_filter, run_once};
pub use stats::{rmse, summarize, RmseSummary};
