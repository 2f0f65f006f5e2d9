//! Batch runner: a versioned JSON config in, `report.json` and `curves.csv`
//! out.

pub mod builtins;
pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

pub use config::{Overrides, Validated};

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Numerics(#[from] chaos_bounds::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerics(chaos_bounds::Error::NoConvergence { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub flags: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.flags.is_empty() {
            0
        } else {
            3
        }
    }
}

/// Validates, computes inside a pool of `workers` threads (all cores when
/// `None`), then writes both files. Nothing is written unless the
/// computation finishes.
pub fn run(
    config: &Path,
    overrides: &Overrides,
    workers: Option<usize>,
) -> Result<RunSummary, CliError> {
    let v = config::load(config, overrides)?;
    if workers == Some(0) {
        return Err(CliError::Validation("workers must be positive".into()));
    }
    run_validated(&v, workers)
}

pub fn run_validated(v: &Validated, workers: Option<usize>) -> Result<RunSummary, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let outcome = pool.install(|| experiments::run(v))?;
    let report = json!({
        "version": report::int(config::CONFIG_VERSION as u128, "report schema version"),
        "kind": v.plan.kind(),
        "config": v.raw,
        "seed": report::int(v.seed as u128, "effective seed"),
        "results": outcome.results,
        "flags": outcome.flags,
        "converged": outcome.flags.is_empty(),
    });
    std::fs::create_dir_all(&v.output_dir)?;
    let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    std::fs::write(v.output_dir.join(REPORT_FILE), text + "\n")?;
    std::fs::write(
        v.output_dir.join(CURVES_FILE),
        report::curves_csv(&outcome.curves),
    )?;
    Ok(RunSummary {
        output_dir: v.output_dir.clone(),
        flags: outcome.flags,
    })
}
