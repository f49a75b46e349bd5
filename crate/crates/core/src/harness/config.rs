use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::SbmParams;
use crate::error::{Error, Result};
use crate::model::{AdamConfig, Arch, ModelConfig};
use crate::propagation::PropagationConfig;
use crate::sampling::SamplerConfig;
use crate::smoothing::{LossMode, PacingSchedule};

/// Every recognised key with its default value and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("dataset.source", "sbm", "sbm | files"),
    ("dataset.edges", "", "edge list path (files source)"),
    ("dataset.features", "", "feature matrix path, CSV or binary (files source)"),
    ("dataset.labels", "", "label file path (files source)"),
    ("dataset.splits", "", "split file path (files source)"),
    ("sbm.blocks", "8", "number of blocks / classes"),
    ("sbm.nodes_per_block", "250", "nodes in each block"),
    ("sbm.p_in", "0.05", "edge probability inside a block"),
    ("sbm.p_out", "0.002", "edge probability across blocks"),
    ("sbm.feature_dim", "16", "feature width"),
    ("sbm.feature_noise", "1.0", "std of Gaussian feature noise"),
    ("sbm.train_fraction", "0.3", "training nodes per block"),
    ("sbm.val_fraction", "0.1", "validation nodes per block"),
    ("sbm.seed", "0", "graph generation seed"),
    ("sampler.kind", "cluster", "full | cluster | random_walk | neighbor | random_nodes"),
    ("sampler.num_parts", "32", "cluster: number of parts"),
    ("sampler.parts_per_batch", "2", "cluster: parts merged into one batch"),
    ("sampler.num_roots", "100", "random_walk: root training nodes per batch"),
    ("sampler.walk_length", "2", "random_walk: steps per walk"),
    ("sampler.batches_per_epoch", "0", "random_walk: batches per epoch, 0 = cover the training set once"),
    ("sampler.batch_size", "128", "neighbor: seed training nodes per batch"),
    ("sampler.fanouts", "10,10,10", "neighbor: neighbors sampled per hop"),
    ("sampler.num_batches", "16", "random_nodes: batches per epoch"),
    ("model.arch", "gcn", "gcn | mlp"),
    ("model.depth", "3", "number of layers"),
    ("model.hidden", "64", "hidden width"),
    ("model.dropout", "0.5", "dropout after hidden activations"),
    ("model.sign_hops", "0", "precompute [X | AX | ... | A^h X] features before training"),
    ("optim.lr", "0.01", "Adam learning rate, shared by the model and W"),
    ("optim.beta1", "0.9", "Adam first-moment decay"),
    ("optim.beta2", "0.999", "Adam second-moment decay"),
    ("optim.eps", "1e-8", "Adam epsilon"),
    ("loss.mode", "als", "plain | ls | als"),
    ("loss.ls_alpha", "0.1", "smoothing strength of uniform label smoothing"),
    ("loss.gamma", "0.001", "weight of the KL term on the refined target"),
    ("loss.detach_soft_target", "false", "train W only through the KL term"),
    ("pacing.kind", "linear", "constant | linear | exponential"),
    ("pacing.alpha", "0.1", "constant: smoothing strength"),
    ("pacing.r", "0.01", "linear / exponential: pacing rate"),
    ("pacing.b", "0.15", "exponential: starting strength"),
    ("pacing.alpha_max", "0.1", "cap on the smoothing strength"),
    ("propagation.beta", "0.1", "re-injection weight of the observed labels"),
    ("propagation.k", "2", "propagation steps"),
    ("propagation.self_loops", "false", "add self-loops before row normalization"),
    ("ablation.no_propagation", "false", "feed one-hot labels through W"),
    ("ablation.no_refinement", "false", "use propagated labels directly, no KL term"),
    ("ablation.no_pacing", "false", "constant smoothing strength 0.1"),
    ("baseline.label_input", "false", "append propagated labels to the features"),
    ("train.epochs", "100", "training epochs"),
    ("train.seed", "0", "first run seed"),
    ("train.num_seeds", "1", "runs with seeds seed, seed+1, ..."),
    ("sweep.r", "", "comma list of pacing.r values"),
    ("sweep.gamma", "", "comma list of loss.gamma values"),
    ("sweep.beta", "", "comma list of propagation.beta values"),
    ("sweep.k", "", "comma list of propagation.k values"),
];

/// Strength used when pacing is ablated.
pub const NO_PACING_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Sbm(SbmParams),
    Files {
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
        splits: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablations {
    pub no_propagation: bool,
    pub no_refinement: bool,
    pub no_pacing: bool,
}

impl Ablations {
    pub fn any(&self) -> bool {
        self.no_propagation || self.no_refinement || self.no_pacing
    }
}

/// Grid of hyperparameter values; empty lists are not swept.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub r: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub k: Vec<usize>,
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
    pub dataset: DatasetSource,
    pub sampler: SamplerConfig,
    pub model: ModelConfig,
    pub sign_hops: usize,
    pub optim: AdamConfig,
    pub mode: LossMode,
    pub ls_alpha: f64,
    pub gamma: f64,
    pub detach_soft_target: bool,
    pub pacing: PacingSchedule,
    pub propagation: PropagationConfig,
    pub ablations: Ablations,
    pub label_input: bool,
    pub epochs: usize,
    pub seed: u64,
    pub num_seeds: usize,
    pub sweep: SweepGrid,
}

fn parse_value<T: FromStr>(entries: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = &entries[key];
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

fn parse_list<T: FromStr>(entries: &BTreeMap<String, String>, key: &str) -> Result<Vec<T>> {
    entries[key]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}"))))
        .collect()
}

fn parse_bool(entries: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match entries[key].as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected true or false, got {other:?}"))),
    }
}

fn defaults() -> BTreeMap<String, String> {
    KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_entries(defaults()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment. Keys missing from
    /// the text keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Like [`parse`](Self::parse), then apply `key=value` overrides in order.
    pub fn parse_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries = defaults();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            set_entry(&mut entries, key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        for (k, v) in overrides {
            set_entry(&mut entries, k.trim(), v.trim())?;
        }
        Self::from_entries(entries)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with_overrides(&text, overrides)
    }

    /// Copy with one key replaced.
    pub fn with(&self, key: &str, value: &str) -> Result<Self> {
        let mut entries = self.entries.clone();
        set_entry(&mut entries, key, value)?;
        Self::from_entries(entries)
    }

    /// Copy with several keys replaced; validation happens once at the end.
    pub fn with_all(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut entries = self.entries.clone();
        for (k, v) in pairs {
            set_entry(&mut entries, k, v)?;
        }
        Self::from_entries(entries)
    }

    /// Every key with its resolved value.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// The resolved configuration in the text format accepted by
    /// [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn from_entries(entries: BTreeMap<String, String>) -> Result<Self> {
        let e = &entries;
        let dataset = match e["dataset.source"].as_str() {
            "sbm" => DatasetSource::Sbm(SbmParams {
                blocks: parse_value(e, "sbm.blocks")?,
                nodes_per_block: parse_value(e, "sbm.nodes_per_block")?,
                p_in: parse_value(e, "sbm.p_in")?,
                p_out: parse_value(e, "sbm.p_out")?,
                feature_dim: parse_value(e, "sbm.feature_dim")?,
                feature_noise: parse_value(e, "sbm.feature_noise")?,
                train_fraction: parse_value(e, "sbm.train_fraction")?,
                val_fraction: parse_value(e, "sbm.val_fraction")?,
                seed: parse_value(e, "sbm.seed")?,
            }),
            "files" => {
                let path = |key: &str| -> Result<PathBuf> {
                    if e[key].is_empty() {
                        Err(Error::Config(format!("{key} is required when dataset.source = files")))
                    } else {
                        Ok(PathBuf::from(&e[key]))
                    }
                };
                DatasetSource::Files {
                    edges: path("dataset.edges")?,
                    features: path("dataset.features")?,
                    labels: path("dataset.labels")?,
                    splits: path("dataset.splits")?,
                }
            }
            other => return Err(Error::Config(format!("dataset.source: unknown source {other:?}"))),
        };
        let sampler = match e["sampler.kind"].as_str() {
            "full" => SamplerConfig::Full,
            "cluster" => SamplerConfig::Cluster {
                num_parts: parse_value(e, "sampler.num_parts")?,
                parts_per_batch: parse_value(e, "sampler.parts_per_batch")?,
            },
            "random_walk" => SamplerConfig::RandomWalk {
                num_roots: parse_value(e, "sampler.num_roots")?,
                walk_length: parse_value(e, "sampler.walk_length")?,
                batches_per_epoch: parse_value(e, "sampler.batches_per_epoch")?,
            },
            "neighbor" => SamplerConfig::Neighbor {
                batch_size: parse_value(e, "sampler.batch_size")?,
                fanouts: parse_list(e, "sampler.fanouts")?,
            },
            "random_nodes" => SamplerConfig::RandomNodes {
                num_batches: parse_value(e, "sampler.num_batches")?,
            },
            other => return Err(Error::Config(format!("sampler.kind: unknown sampler {other:?}"))),
        };
        let arch = match e["model.arch"].as_str() {
            "gcn" => Arch::Gcn,
            "mlp" => Arch::Mlp,
            other => return Err(Error::Config(format!("model.arch: unknown architecture {other:?}"))),
        };
        let mode = match e["loss.mode"].as_str() {
            "plain" => LossMode::Plain,
            "ls" => LossMode::Ls,
            "als" => LossMode::Als,
            other => return Err(Error::Config(format!("loss.mode: unknown mode {other:?}"))),
        };
        let alpha_max = parse_value(e, "pacing.alpha_max")?;
        let pacing = match e["pacing.kind"].as_str() {
            "constant" => PacingSchedule::constant(parse_value(e, "pacing.alpha")?),
            "linear" => PacingSchedule::linear(parse_value(e, "pacing.r")?, alpha_max),
            "exponential" => PacingSchedule::exponential(parse_value(e, "pacing.b")?, parse_value(e, "pacing.r")?, alpha_max),
            other => return Err(Error::Config(format!("pacing.kind: unknown schedule {other:?}"))),
        };
        let cfg = Self {
            dataset,
            sampler,
            model: ModelConfig {
                arch,
                depth: parse_value(e, "model.depth")?,
                hidden: parse_value(e, "model.hidden")?,
                dropout: parse_value(e, "model.dropout")?,
            },
            sign_hops: parse_value(e, "model.sign_hops")?,
            optim: AdamConfig {
                lr: parse_value(e, "optim.lr")?,
                beta1: parse_value(e, "optim.beta1")?,
                beta2: parse_value(e, "optim.beta2")?,
                eps: parse_value(e, "optim.eps")?,
            },
            mode,
            ls_alpha: parse_value(e, "loss.ls_alpha")?,
            gamma: parse_value(e, "loss.gamma")?,
            detach_soft_target: parse_bool(e, "loss.detach_soft_target")?,
            pacing,
            propagation: PropagationConfig {
                beta: parse_value(e, "propagation.beta")?,
                k: parse_value(e, "propagation.k")?,
                add_self_loops: parse_bool(e, "propagation.self_loops")?,
            },
            ablations: Ablations {
                no_propagation: parse_bool(e, "ablation.no_propagation")?,
                no_refinement: parse_bool(e, "ablation.no_refinement")?,
                no_pacing: parse_bool(e, "ablation.no_pacing")?,
            },
            label_input: parse_bool(e, "baseline.label_input")?,
            epochs: parse_value(e, "train.epochs")?,
            seed: parse_value(e, "train.seed")?,
            num_seeds: parse_value(e, "train.num_seeds")?,
            sweep: SweepGrid {
                r: parse_list(e, "sweep.r")?,
                gamma: parse_list(e, "sweep.gamma")?,
                beta: parse_list(e, "sweep.beta")?,
                k: parse_list(e, "sweep.k")?,
            },
            entries,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        if let DatasetSource::Sbm(p) = &self.dataset {
            p.validate().map_err(wrap)?;
        }
        self.optim.validate().map_err(wrap)?;
        self.pacing.validate().map_err(wrap)?;
        self.propagation.validate().map_err(wrap)?;
        if self.model.depth == 0 || !(0.0..1.0).contains(&self.model.dropout) {
            return Err(Error::Config("model.depth must be >= 1 and model.dropout in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.ls_alpha) {
            return Err(Error::Config(format!("loss.ls_alpha = {} must lie in [0, 1]", self.ls_alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("loss.gamma = {} must be nonnegative", self.gamma)));
        }
        if self.epochs == 0 || self.num_seeds == 0 {
            return Err(Error::Config("train.epochs and train.num_seeds must be positive".into()));
        }
        if self.ablations.any() && self.mode != LossMode::Als {
            return Err(Error::Config("ablation flags require loss.mode = als".into()));
        }
        if self.ablations.no_propagation && self.ablations.no_refinement {
            return Err(Error::Config(
                "ablation.no_propagation and ablation.no_refinement together leave no soft target".into(),
            ));
        }
        if self.label_input && self.mode == LossMode::Als {
            return Err(Error::Config("baseline.label_input is a separate baseline and cannot be combined with loss.mode = als".into()));
        }
        Ok(())
    }

    /// Smoothing strength at epoch `t`.
    pub fn alpha_at(&self, t: usize) -> f64 {
        match self.mode {
            LossMode::Plain => 0.0,
            LossMode::Ls => self.ls_alpha,
            LossMode::Als if self.ablations.no_pacing => NO_PACING_ALPHA,
            LossMode::Als => self.pacing.alpha_at(t),
        }
    }

    /// Whether training needs the propagated label matrix.
    pub fn needs_propagation(&self) -> bool {
        self.label_input || (self.mode == LossMode::Als && !self.ablations.no_propagation)
    }

    /// Whether a trainable refinement matrix is used.
    pub fn uses_refinement(&self) -> bool {
        self.mode == LossMode::Als && !self.ablations.no_refinement
    }

    /// Run seeds `seed, seed + 1, …`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|i| self.seed + i).collect()
    }
}

fn set_entry(entries: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<()> {
    match entries.get_mut(key) {
        Some(slot) => {
            *slot = value.to_string();
            Ok(())
        }
        None => Err(Error::Config(format!("unknown key {key:?}"))),
    }
}

/// Split `key=value` into its parts.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))
}
