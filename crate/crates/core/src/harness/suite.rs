use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::train::{load_data, prepare, prepare_with, propagate_labels, run_seeds, summarize};
use crate::data::{io, ExperimentReport};
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;
use crate::metrics::{bias_stats, mean_and_sample_std, BiasStats};
use crate::model::{Arch, Layer, ModelParams};
use crate::propagation::{predict_by_propagation, propagation_accuracy};
use crate::rng::{derive_key, tag};
use crate::sampling::Sampler;
use crate::smoothing::RefinementMatrix;

/// One point of a hyperparameter sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Swept keys and their values at this point.
    pub values: BTreeMap<String, String>,
    pub report: ExperimentReport,
}

impl SweepPoint {
    /// `r=0.01_k=2`-style identifier.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(k, v)| format!("{}={v}", k.rsplit('.').next().unwrap_or(k)))
            .collect();
        if parts.is_empty() {
            "base".into()
        } else {
            parts.join("_")
        }
    }
}

/// Every combination of the non-empty sweep lists, in key order.
pub fn sweep_configs(cfg: &ExperimentConfig) -> Result<Vec<(BTreeMap<String, String>, ExperimentConfig)>> {
    let axes: Vec<(&str, Vec<String>)> = [
        ("pacing.r", cfg.sweep.r.iter().map(f64::to_string).collect::<Vec<_>>()),
        ("loss.gamma", cfg.sweep.gamma.iter().map(f64::to_string).collect()),
        ("propagation.beta", cfg.sweep.beta.iter().map(f64::to_string).collect()),
        ("propagation.k", cfg.sweep.k.iter().map(usize::to_string).collect()),
    ]
    .into_iter()
    .filter(|(_, v)| !v.is_empty())
    .collect();
    let mut points = vec![(BTreeMap::new(), cfg.clone())];
    for (key, values) in axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for (assigned, base) in &points {
            for v in &values {
                let mut assigned = assigned.clone();
                assigned.insert(key.to_string(), v.clone());
                next.push((assigned, base.with(key, v)?));
            }
        }
        points = next;
    }
    Ok(points)
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let d = load_data(cfg)?;
    sweep_configs(cfg)?
        .into_iter()
        .map(|(values, point)| {
            let prep = prepare_with(&point, d.clone())?;
            let runs = run_seeds(&point, &prep)?;
            Ok(SweepPoint {
                values,
                report: summarize(&point, &prep.dataset, &runs)?,
            })
        })
        .collect()
}

/// Names and settings of the full model and its three ablations.
pub const ABLATION_VARIANTS: [(&str, &str); 4] = [
    ("als", ""),
    ("no_propagation", "ablation.no_propagation"),
    ("no_refinement", "ablation.no_refinement"),
    ("no_pacing", "ablation.no_pacing"),
];

/// Run full ALS and each single ablation under the same settings.
pub fn ablate(cfg: &ExperimentConfig) -> Result<Vec<(String, ExperimentReport)>> {
    let mut base = cfg.with("loss.mode", "als")?;
    for (_, key) in &ABLATION_VARIANTS[1..] {
        base = base.with(key, "false")?;
    }
    let d = load_data(&base)?;
    ABLATION_VARIANTS
        .iter()
        .map(|(name, key)| {
            let variant = if key.is_empty() { base.clone() } else { base.with(key, "true")? };
            let prep = prepare_with(&variant, d.clone())?;
            let runs = run_seeds(&variant, &prep)?;
            Ok((name.to_string(), summarize(&variant, &prep.dataset, &runs)?))
        })
        .collect()
}

/// `variant,test_acc_mean,test_acc_std` over named reports.
pub fn accuracy_table(rows: &[(String, ExperimentReport)]) -> String {
    let mut out = String::from("variant,test_acc_mean,test_acc_std\n");
    for (name, r) in rows {
        out.push_str(&format!("{name},{},{}\n", r.final_test_accuracy.mean, r.final_test_accuracy.std));
    }
    out
}

/// One line of the label-exploitation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub method: String,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    /// Fraction of test nodes that received a prediction.
    pub coverage: f64,
}

pub const BASELINE_HEADER: &str = "method,test_acc_mean,test_acc_std,coverage";

pub fn baselines_csv(rows: &[BaselineRow]) -> String {
    let mut out = format!("{BASELINE_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.method, r.test_acc_mean, r.test_acc_std, r.coverage));
    }
    out
}

/// Propagation-only prediction, plain training on label-augmented
/// features, and ALS, all under the settings of `cfg`.
pub fn baselines(cfg: &ExperimentConfig) -> Result<Vec<BaselineRow>> {
    let d = load_data(cfg)?;
    let yk = propagate_labels(cfg, &d)?;
    let pred = predict_by_propagation(&yk);
    let test = d.test_nodes();
    let covered = test.iter().filter(|&&i| pred[i].is_some()).count();
    let mut rows = vec![BaselineRow {
        method: "propagation".into(),
        test_acc_mean: propagation_accuracy(&pred, &d, test),
        test_acc_std: 0.0,
        coverage: if test.is_empty() { 0.0 } else { covered as f64 / test.len() as f64 },
    }];
    let mut base = cfg.clone();
    for (_, key) in &ABLATION_VARIANTS[1..] {
        base = base.with(key, "false")?;
    }
    for (method, mode, label_input) in [("label_input", "plain", "true"), ("als", "als", "false")] {
        let variant = base.with_all(&[("loss.mode", mode), ("baseline.label_input", label_input)])?;
        let prep = prepare_with(&variant, d.clone())?;
        let runs = run_seeds(&variant, &prep)?;
        let accs: Vec<f64> = runs.iter().map(|r| r.evaluation.test_acc).collect();
        let (mean, std) = mean_and_sample_std(&accs);
        rows.push(BaselineRow {
            method: method.into(),
            test_acc_mean: mean,
            test_acc_std: std,
            coverage: 1.0,
        });
    }
    Ok(rows)
}

/// Bias statistics of the configured sampler, pooled over the first epoch
/// of every configured seed.
pub fn analyze_bias(cfg: &ExperimentConfig) -> Result<BiasStats> {
    let d = load_data(cfg)?;
    let mut batches = Vec::new();
    for seed in cfg.seeds() {
        let sampler = Sampler::new(&d, cfg.sampler.clone(), derive_key(seed, &[tag::SAMPLER]))?;
        batches.extend(sampler.epoch(&d, 0)?);
    }
    bias_stats(&batches, &d)
}

/// Propagated labels and their accuracy on the test split.
pub fn propagate_only(cfg: &ExperimentConfig) -> Result<(DenseMatrix, f64)> {
    let prep = prepare(&cfg.with_all(&[
        ("loss.mode", "als"),
        ("ablation.no_propagation", "false"),
        ("baseline.label_input", "false"),
    ])?)?;
    let yk = prep.propagated.expect("als mode propagates");
    let acc = propagation_accuracy(&predict_by_propagation(&yk), &prep.dataset, prep.dataset.test_nodes());
    Ok((yk.into_inner(), acc))
}

/// Files of a saved checkpoint, listed in `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub arch: Arch,
    pub dropout: f64,
    /// `(weight file, bias file)` per layer.
    pub layers: Vec<(String, String)>,
    pub refinement: Option<String>,
}

/// Save parameters as binary matrices plus a JSON manifest.
pub fn save_checkpoint(params: &ModelParams, refinement: Option<&RefinementMatrix>, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::new();
    for (i, layer) in params.layers().iter().enumerate() {
        let (wf, bf) = (format!("layer{i}.weight.bin"), format!("layer{i}.bias.bin"));
        io::write_matrix_binary(&layer.weight, &dir.join(&wf))?;
        let bias = DenseMatrix::from_vec(1, layer.bias.len(), layer.bias.clone())?;
        io::write_matrix_binary(&bias, &dir.join(&bf))?;
        layers.push((wf, bf));
    }
    let refinement = match refinement {
        Some(w) => {
            io::write_matrix_binary(&w.w, &dir.join("refinement.bin"))?;
            Some("refinement.bin".to_string())
        }
        None => None,
    };
    let manifest = CheckpointManifest {
        arch: params.arch(),
        dropout: params.dropout(),
        layers,
        refinement,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_checkpoint(dir: &Path) -> Result<(ModelParams, Option<RefinementMatrix>)> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)?;
    let layers = manifest
        .layers
        .iter()
        .map(|(wf, bf)| {
            Ok(Layer {
                weight: io::read_matrix_binary(&dir.join(wf))?,
                bias: io::read_matrix_binary(&dir.join(bf))?.into_values(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params = ModelParams::from_layers(manifest.arch, manifest.dropout, layers)?;
    let refinement = match &manifest.refinement {
        Some(f) => Some(RefinementMatrix::from_weights(io::read_matrix_binary(&dir.join(f))?)?),
        None => None,
    };
    Ok((params, refinement))
}
