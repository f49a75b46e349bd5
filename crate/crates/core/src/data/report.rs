use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::BiasStats;

/// Metrics recorded after one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub alpha_t: f64,
    /// Mean of the per-batch training objective over the epoch.
    pub train_loss: f64,
    /// Plain cross-entropy on the test nodes, full-graph evaluation.
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Mean maximum predicted probability over training nodes.
    pub mean_max_prob: f64,
}

/// Final test accuracy across repeated seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seeds: Vec<u64>,
    pub test_acc: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
}

impl SeedSummary {
    pub fn new(seeds: Vec<u64>, test_acc: Vec<f64>) -> Self {
        let (mean, std) = crate::metrics::mean_and_sample_std(&test_acc);
        Self {
            seeds,
            test_acc,
            mean,
            std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Fully resolved configuration, flat `key -> value`.
    pub config: BTreeMap<String, String>,
    pub per_epoch: Vec<EpochRecord>,
    pub bias_stats: BiasStats,
    pub final_test_accuracy: SeedSummary,
    pub final_relevance_path: Option<String>,
}

pub const CURVE_HEADER: &str = "epoch,alpha_t,train_loss,test_loss,train_acc,test_acc,mean_max_prob";

/// Loss curves as CSV text.
pub fn curves_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in &report.per_epoch {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch, r.alpha_t, r.train_loss, r.test_loss, r.train_acc, r.test_acc, r.mean_max_prob
        ));
    }
    out
}

/// Path of the CSV written next to a JSON report.
pub fn curves_path(json_path: &Path) -> PathBuf {
    json_path.with_extension("csv")
}

/// Write the JSON report to `path` and the loss curves next to it.
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))?;
    let csv = curves_path(path);
    fs::write(&csv, curves_csv(report)).map_err(|e| Error::io(&csv, e))
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
