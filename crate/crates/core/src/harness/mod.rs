//! Experiment orchestration: configuration, the training loop, and the
//! comparison suites (sweeps, ablations, baselines).

mod config;
mod suite;
mod train;

pub use config::{parse_override, Ablations, DatasetSource, ExperimentConfig, SweepGrid, KEYS, NO_PACING_ALPHA};
pub use suite::{
    ablate, accuracy_table, analyze_bias, baselines, baselines_csv, load_checkpoint, propagate_only, save_checkpoint,
    sweep, sweep_configs, BaselineRow, CheckpointManifest, SweepPoint, ABLATION_VARIANTS, BASELINE_HEADER,
};
pub use train::{
    evaluate, export_relevance, label_input_features, load_data, prepare, prepare_with, propagate_labels, run_experiment,
    run_seeds, summarize, train_seed, Evaluation, Prepared, SeedRun,
};
