//! CSV and JSON export of campaign results.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::config::ExperimentConfig;
use crate::bench::stats::RmseSummary;
use crate::distributions::ExponentialThreshold;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<ExportFormat> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::config(format!("unknown format '{other}'"))),
        }
    }
}

/// One campaign's config and results, the unit of export.
pub struct Campaign {
    pub config: ExperimentConfig,
    pub summary: RmseSummary,
}

fn threshold_column(t: ExponentialThreshold) -> String {
    match t {
        ExponentialThreshold::Disabled => "-".to_string(),
        ExponentialThreshold::Rate(r) => format!("{r}"),
    }
}

pub const CSV_HEADER: &str = "run_id,system,case,filter,alpha,beta,particles,seed,rmse";

/// CSV body for one campaign: one row per run, no header.
pub fn csv_rows(campaign: &Campaign) -> String {
    let cfg = &campaign.config;
    let alpha = threshold_column(cfg.alpha);
    let beta = threshold_column(cfg.beta);
    let mut out = String::new();
    for (run_id, rmse) in campaign.summary.per_run_rmse.iter().enumerate() {
        let rmse = if rmse.is_finite() { format!("{rmse}") } else { "NaN".to_string() };
        out.push_str(&format!(
            "{run_id},{},{},{},{alpha},{beta},{},{},{rmse}\n",
            cfg.system.name(),
            cfg.case.name(),
            cfg.filter.name(),
            cfg.particles,
            cfg.seed,
        ));
    }
    out
}

/// Full CSV document covering one or more campaigns.
pub fn to_csv(campaigns: &[Campaign]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for campaign in campaigns {
        out.push_str(&csv_rows(campaign));
    }
    out
}

/// JSON export: config echo plus the summary statistics. Failed runs appear
/// as null in `per_run_rmse` (JSON has no NaN literal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonReport {
    pub config: ExperimentConfig,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub failed_runs: usize,
    pub per_run_rmse: Vec<Option<f64>>,
}

impl JsonReport {
    pub fn new(campaign: &Campaign) -> Self {
        let s = &campaign.summary;
        JsonReport {
            config: campaign.config.clone(),
            mean: s.mean,
            median: s.median,
            q1: s.q1,
            q3: s.q3,
            min: s.min,
            max: s.max,
            failed_runs: s.failed_runs,
            per_run_rmse: s
                .per_run_rmse
                .iter()
                .map(|v| if v.is_finite() { Some(*v) } else { None })
                .collect(),
        }
    }

    pub fn summary(&self) -> RmseSummary {
        RmseSummary {
            per_run_rmse: self
                .per_run_rmse
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect(),
            mean: self.mean,
            median: self.median,
            q1: self.q1,
            q3: self.q3,
            min: self.min,
            max: self.max,
            failed_runs: self.failed_runs,
        }
    }
}

pub fn to_json(campaign: &Campaign) -> Result<String> {
    serde_json::to_string_pretty(&JsonReport::new(campaign))
        .map_err(|e| Error::config(format!("JSON serialization failed: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source: std::io::Error| Error::Io { path: path.display().to_string(), source };
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(contents.as_bytes()).map_err(io_err)
}

/// Write one campaign to `path` in the requested format.
pub fn export(campaign: &Campaign, format: ExportFormat, path: &Path) -> Result<()> {
    let contents = match format {
        ExportFormat::Csv => to_csv(std::slice::from_ref(campaign)),
        ExportFormat::Json => to_json(campaign)?,
    };
    write_file(path, &contents)
}

/// Write a multi-campaign sweep as a single CSV.
pub fn export_sweep_csv(campaigns: &[Campaign], path: &Path) -> Result<()> {
    write_file(path, &to_csv(campaigns))
}
