//! `als-graph`: run label-propagation, training, bias analysis, ablation,
//! sweep and baseline experiments from a flat `key = value` config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use als_core::data::{curves_path, io, write_report};
use als_core::harness::{self, parse_override, ExperimentConfig};
use als_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "als-graph", version, about = "Adaptive label smoothing experiments on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (`key = value` lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set loss.mode=plain`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set train.epochs=N`.
    #[arg(long)]
    epochs: Option<usize>,
    /// Shorthand for `--set train.seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for `--set train.num_seeds=N`.
    #[arg(long)]
    num_seeds: Option<usize>,
    /// Shorthand for `--set loss.mode=MODE`.
    #[arg(long)]
    mode: Option<String>,
    /// Shorthand for `--set sampler.kind=KIND`.
    #[arg(long)]
    sampler: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut overrides = Vec::new();
        let shorthand = [
            ("train.epochs", self.epochs.map(|v| v.to_string())),
            ("train.seed", self.seed.map(|v| v.to_string())),
            ("train.num_seeds", self.num_seeds.map(|v| v.to_string())),
            ("loss.mode", self.mode.clone()),
            ("sampler.kind", self.sampler.clone()),
        ];
        for (key, value) in shorthand {
            if let Some(v) = value {
                overrides.push((key.to_string(), v));
            }
        }
        for s in &self.set {
            overrides.push(parse_override(s)?);
        }
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None => ExperimentConfig::parse_with_overrides("", &overrides),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate training labels and write the soft label matrix.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// CSV destination for the propagated labels.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train over every configured seed and write a JSON report plus a
    /// CSV of per-epoch curves next to it.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Also write the class relevance matrix of the first seed.
        #[arg(long)]
        relevance: Option<PathBuf>,
        /// Also save the first seed's parameters into this directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Per-class spread of the training label distribution across batches.
    AnalyzeBias {
        #[command(flatten)]
        common: Common,
        /// CSV destination; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full model against each single-module ablation.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// One report per point of the `sweep.*` grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write `Softmax` relevance profiles of a trained refinement matrix.
    ExportRelevance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Read the matrix from a saved checkpoint instead of training.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Propagation-only, label-input and ALS accuracy in one CSV.
    Baselines {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Propagate { common, out } => {
            let cfg = common.resolve()?;
            let (yk, acc) = harness::propagate_only(&cfg)?;
            io::write_matrix_csv(&yk, &out)?;
            Ok(json!({ "command": "propagate", "out": out, "test_acc": acc }))
        }
        Command::Train {
            common,
            out,
            relevance,
            checkpoint,
        } => {
            let cfg = common.resolve()?;
            let prep = harness::prepare(&cfg)?;
            let runs = harness::run_seeds(&cfg, &prep)?;
            let mut report = harness::summarize(&cfg, &prep.dataset, &runs)?;
            if let Some(path) = &relevance {
                let w = runs[0]
                    .refinement
                    .as_ref()
                    .ok_or_else(|| Error::Config("--relevance needs a trained refinement matrix (loss.mode = als)".into()))?;
                harness::export_relevance(w, path)?;
                report.final_relevance_path = Some(path.display().to_string());
            }
            if let Some(dir) = &checkpoint {
                harness::save_checkpoint(&runs[0].params, runs[0].refinement.as_ref(), dir)?;
            }
            write_report(&report, &out)?;
            Ok(json!({
                "command": "train",
                "out": out,
                "curves": curves_path(&out),
                "test_acc_mean": report.final_test_accuracy.mean,
                "test_acc_std": report.final_test_accuracy.std,
            }))
        }
        Command::AnalyzeBias { common, out } => {
            let cfg = common.resolve()?;
            let stats = harness::analyze_bias(&cfg)?;
            match &out {
                Some(path) => write_text(path, &stats.to_csv())?,
                None => print!("{}", stats.to_csv()),
            }
            Ok(json!({
                "command": "analyze-bias",
                "out": out,
                "num_batches": stats.num_batches,
                "mean_std": stats.mean_std(),
            }))
        }
        Command::Ablate { common, out_dir } => {
            let cfg = common.resolve()?;
            create_dir(&out_dir)?;
            let rows = harness::ablate(&cfg)?;
            for (name, report) in &rows {
                write_report(report, &out_dir.join(format!("{name}.json")))?;
            }
            let table = out_dir.join("ablation.csv");
            write_text(&table, &harness::accuracy_table(&rows))?;
            Ok(json!({ "command": "ablate", "out": table }))
        }
        Command::Sweep { common, out_dir } => {
            let cfg = common.resolve()?;
            create_dir(&out_dir)?;
            let points = harness::sweep(&cfg)?;
            let rows: Vec<(String, _)> = points.iter().map(|p| (p.label(), p.report.clone())).collect();
            for (label, report) in &rows {
                write_report(report, &out_dir.join(format!("{label}.json")))?;
            }
            let table = out_dir.join("sweep.csv");
            write_text(&table, &harness::accuracy_table(&rows))?;
            Ok(json!({ "command": "sweep", "out": table, "points": rows.len() }))
        }
        Command::ExportRelevance { common, out, checkpoint } => {
            let w = match &checkpoint {
                Some(dir) => harness::load_checkpoint(dir)?
                    .1
                    .ok_or_else(|| Error::Config(format!("checkpoint {} has no refinement matrix", dir.display())))?,
                None => {
                    let cfg = common.resolve()?;
                    if !cfg.uses_refinement() {
                        return Err(Error::Config("export-relevance needs loss.mode = als without ablation.no_refinement".into()));
                    }
                    let prep = harness::prepare(&cfg)?;
                    harness::train_seed(&cfg, &prep, cfg.seed)?
                        .refinement
                        .expect("refinement enabled")
                }
            };
            harness::export_relevance(&w, &out)?;
            Ok(json!({ "command": "export-relevance", "out": out }))
        }
        Command::Baselines { common, out } => {
            let cfg = common.resolve()?;
            let rows = harness::baselines(&cfg)?;
            write_text(&out, &harness::baselines_csv(&rows))?;
            Ok(json!({ "command": "baselines", "out": out }))
        }
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "status": "error", "kind": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    match run(cli) {
        Ok(mut summary) => {
            summary["status"] = json!("ok");
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
