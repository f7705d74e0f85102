//! Benchmark campaigns: registration, stratified sampling, limited runs,
//! scoring and report files.

mod registry;
mod reports;
mod runner;
mod scoring;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::Status;

pub use registry::{register_benchmarks, stratified_sample, BenchmarkInstance, BenchmarkSet, Registry, Rejected};
pub use reports::{emit_reports, write_cactus, write_families, write_scores, TrialMetric, TrialTable};
pub use runner::{execute_runs, read_records, Engine, RunLimits, ToolSet, ToolSpec};
pub use scoring::{
    best_foot, detect_discrepancies, format_k, rank_par, rank_solved, BestFootReport, Discrepancy, FootCategory, FootRow, ScoreRow,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("tool config: {0}")]
    Tools(String),
    #[error("campaigns cover different instances: {0}")]
    InstanceMismatch(String),
    #[error("record log line {line}: {message}")]
    Record { line: usize, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> HarnessError {
        HarnessError::Io { path: path.as_ref().display().to_string(), source }
    }
}

/// One line of the record log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub instance: String,
    pub family: String,
    pub status: Status,
    pub wall_s: f64,
    pub mem_bytes: u64,
    /// Process exit code; 10/20/0 for internal engines, -1 when killed.
    pub exit: i32,
    pub trial: String,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.status.is_solved()
    }
}
