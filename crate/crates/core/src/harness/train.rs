use std::path::Path;

use super::config::{DatasetSource, ExperimentConfig};
use crate::data::{generate_sbm, io, load_dataset, Dataset, EpochRecord, ExperimentReport, SeedSummary};
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;
use crate::metrics::{argmax, bias_stats, BiasStats};
use crate::model::{adam_step, backward, forward, sign_precompute, ModelParams, OptState};
use crate::propagation::{init_label_matrix, propagate, SoftLabelMatrix};
use crate::rng::{derive_key, tag};
use crate::sampling::{Batch, Sampler};
use crate::smoothing::{loss_and_grads, softmax, LossConfig, LossMode, RefinementMatrix, SoftTarget, LOG_CLAMP};

/// Generate or load the dataset named by `cfg`.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetSource::Sbm(p) => generate_sbm(p),
        DatasetSource::Files {
            edges,
            features,
            labels,
            splits,
        } => load_dataset(edges, features, labels, splits),
    }
}

/// Propagated labels `Y^(K)` of `d` under the configured propagation.
pub fn propagate_labels(cfg: &ExperimentConfig, d: &Dataset) -> Result<SoftLabelMatrix> {
    propagate(d.graph(), &init_label_matrix(d), &cfg.propagation)
}

/// `[x_i | y_i^(K)]` for every node.
pub fn label_input_features(d: &Dataset, yk: &SoftLabelMatrix) -> Result<DenseMatrix> {
    if yk.num_nodes() != d.num_nodes() || yk.num_classes() != d.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "propagated labels are {}x{}, dataset has {} nodes and {} classes",
            yk.num_nodes(),
            yk.num_classes(),
            d.num_nodes(),
            d.num_classes()
        )));
    }
    d.features().hconcat(yk.values())
}

/// Write the class relevance profiles (row `c` = `Softmax(W·e_c)`) as CSV.
pub fn export_relevance(w: &RefinementMatrix, path: &Path) -> Result<()> {
    io::write_matrix_csv(&w.relevance(), path)
}

/// Dataset plus everything derived from it that every seed shares.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    /// Model input features after label concatenation and SIGN.
    pub features: DenseMatrix,
    /// Per-node rows fed to the soft target in ALS mode.
    pub soft_inputs: Option<DenseMatrix>,
    pub propagated: Option<SoftLabelMatrix>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    prepare_with(cfg, load_data(cfg)?)
}

pub fn prepare_with(cfg: &ExperimentConfig, dataset: Dataset) -> Result<Prepared> {
    let propagated = if cfg.needs_propagation() {
        Some(propagate_labels(cfg, &dataset)?)
    } else {
        None
    };
    let mut features = match (&propagated, cfg.label_input) {
        (Some(yk), true) => label_input_features(&dataset, yk)?,
        _ => dataset.features().clone(),
    };
    if cfg.sign_hops > 0 {
        features = sign_precompute(dataset.graph(), &features, cfg.sign_hops)?;
    }
    let soft_inputs = match cfg.mode {
        LossMode::Als if cfg.ablations.no_propagation => Some(init_label_matrix(&dataset).into_inner()),
        LossMode::Als => propagated.as_ref().map(|yk| yk.values().clone()),
        _ => None,
    };
    Ok(Prepared {
        dataset,
        features,
        soft_inputs,
        propagated,
    })
}

/// Full-graph metrics with dropout off.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub train_acc: f64,
    pub test_acc: f64,
    /// Plain cross-entropy over test nodes.
    pub test_loss: f64,
    /// Mean max probability over training nodes.
    pub mean_max_prob: f64,
    pub probs: DenseMatrix,
}

pub fn evaluate(params: &ModelParams, prep: &Prepared) -> Result<Evaluation> {
    let d = &prep.dataset;
    let (logits, _) = forward(params, &Batch::full(d), &prep.features, false, 0)?;
    let mut probs = DenseMatrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        probs.row_mut(r).copy_from_slice(&softmax(logits.row(r)));
    }
    let accuracy = |nodes: &[usize]| {
        if nodes.is_empty() {
            return 0.0;
        }
        let hits = nodes.iter().filter(|&&i| argmax(probs.row(i)) == d.label(i)).count();
        hits as f64 / nodes.len() as f64
    };
    let mean_over = |nodes: &[usize], f: &dyn Fn(usize) -> f64| {
        if nodes.is_empty() {
            0.0
        } else {
            nodes.iter().map(|&i| f(i)).sum::<f64>() / nodes.len() as f64
        }
    };
    let test_loss = mean_over(d.test_nodes(), &|i| -probs.get(i, d.label(i)).max(LOG_CLAMP).ln());
    let mean_max_prob = mean_over(d.train_nodes(), &|i| probs.row(i).iter().copied().fold(0.0, f64::max));
    if !test_loss.is_finite() {
        return Err(Error::NonFinite("test loss".into()));
    }
    Ok(Evaluation {
        train_acc: accuracy(d.train_nodes()),
        test_acc: accuracy(d.test_nodes()),
        test_loss,
        mean_max_prob,
        probs,
    })
}

/// Outcome of training with one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<EpochRecord>,
    /// Batches of the last epoch.
    pub final_batches: Vec<Batch>,
    pub params: ModelParams,
    pub refinement: Option<RefinementMatrix>,
    pub evaluation: Evaluation,
}

impl SeedRun {
    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("at least one epoch")
    }
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(msg) => Error::Diverged { epoch, message: msg },
        other => other,
    }
}

/// Train one model from scratch with `seed`.
pub fn train_seed(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> Result<SeedRun> {
    let d = &prep.dataset;
    let sampler = Sampler::new(d, cfg.sampler.clone(), derive_key(seed, &[tag::SAMPLER]))?;
    let mut params = ModelParams::init(&cfg.model, prep.features.cols(), d.num_classes(), seed)?;
    let mut refinement = cfg.uses_refinement().then(|| RefinementMatrix::random(d.num_classes(), seed));
    let mut opt = OptState::new(cfg.optim)?;
    let gamma = if cfg.ablations.no_refinement { 0.0 } else { cfg.gamma };

    let mut records = Vec::with_capacity(cfg.epochs);
    let mut final_batches = Vec::new();
    let mut evaluation = None;
    for epoch in 0..cfg.epochs {
        let alpha = cfg.alpha_at(epoch);
        let loss_cfg = LossConfig {
            mode: cfg.mode,
            alpha,
            gamma,
            detach_soft_target: cfg.detach_soft_target,
        };
        let batches = sampler.epoch(d, epoch)?;
        let (mut loss_sum, mut loss_weight) = (0.0, 0usize);
        for (b, batch) in batches.iter().enumerate() {
            if batch.train_local().is_empty() {
                continue;
            }
            let train_global = batch.train_global();
            let x = prep.features.gather_rows(batch.global_ids());
            let step_seed = derive_key(seed, &[tag::TRAIN_STEP, epoch as u64, b as u64]);
            let (logits, cache) = forward(&params, batch, &x, true, step_seed)?;
            let train_logits = logits.gather_rows(batch.train_local());
            let labels: Vec<usize> = train_global.iter().map(|&i| d.label(i)).collect();
            let soft_rows = prep.soft_inputs.as_ref().map(|m| m.gather_rows(&train_global));
            let soft = soft_rows.as_ref().map(|inputs| match &refinement {
                Some(w) => SoftTarget::Refined { w, inputs },
                None => SoftTarget::Direct { inputs },
            });
            let out = loss_and_grads(&train_logits, &labels, soft, &loss_cfg).map_err(|e| diverged(epoch, e))?;
            loss_sum += out.breakdown.total * labels.len() as f64;
            loss_weight += labels.len();

            let mut dlogits = DenseMatrix::zeros(logits.rows(), logits.cols());
            for (row, &local) in batch.train_local().iter().enumerate() {
                dlogits.row_mut(local).copy_from_slice(out.dlogits.row(row));
            }
            let grads = backward(&params, &cache, &dlogits)?;
            let mut grad_views = grads.tensors();
            let mut tensors = params.tensors_mut();
            if let Some(w) = refinement.as_mut() {
                w.grad = out.dw.clone();
                tensors.push(w.w.values_mut());
                grad_views.push(out.dw.values());
            }
            adam_step(&mut tensors, &grad_views, &mut opt).map_err(|e| diverged(epoch, e))?;
        }
        if loss_weight == 0 {
            return Err(Error::InvalidArgument(format!("epoch {epoch} produced no batch with training nodes")));
        }
        let eval = evaluate(&params, prep).map_err(|e| diverged(epoch, e))?;
        records.push(EpochRecord {
            epoch,
            alpha_t: alpha,
            train_loss: loss_sum / loss_weight as f64,
            test_loss: eval.test_loss,
            train_acc: eval.train_acc,
            test_acc: eval.test_acc,
            mean_max_prob: eval.mean_max_prob,
        });
        evaluation = Some(eval);
        if epoch + 1 == cfg.epochs {
            final_batches = batches;
        }
    }
    Ok(SeedRun {
        seed,
        records,
        final_batches,
        params,
        refinement,
        evaluation: evaluation.expect("epochs > 0"),
    })
}

/// Train every configured seed.
pub fn run_seeds(cfg: &ExperimentConfig, prep: &Prepared) -> Result<Vec<SeedRun>> {
    cfg.seeds().into_iter().map(|s| train_seed(cfg, prep, s)).collect()
}

/// Aggregate seed runs: per-epoch metrics are averaged over seeds, bias
/// statistics pool the last-epoch batches of every seed.
pub fn summarize(cfg: &ExperimentConfig, d: &Dataset, runs: &[SeedRun]) -> Result<ExperimentReport> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to summarize".into()));
    }
    let n = runs.len() as f64;
    let per_epoch = (0..runs[0].records.len())
        .map(|e| {
            let avg = |f: fn(&EpochRecord) -> f64| runs.iter().map(|r| f(&r.records[e])).sum::<f64>() / n;
            EpochRecord {
                epoch: e,
                alpha_t: avg(|r| r.alpha_t),
                train_loss: avg(|r| r.train_loss),
                test_loss: avg(|r| r.test_loss),
                train_acc: avg(|r| r.train_acc),
                test_acc: avg(|r| r.test_acc),
                mean_max_prob: avg(|r| r.mean_max_prob),
            }
        })
        .collect();
    let pooled: Vec<Batch> = runs.iter().flat_map(|r| r.final_batches.iter().cloned()).collect();
    let bias = match bias_stats(&pooled, d) {
        Ok(b) => b,
        Err(_) => BiasStats {
            mean: vec![0.0; d.num_classes()],
            std: vec![0.0; d.num_classes()],
            num_batches: 0,
        },
    };
    Ok(ExperimentReport {
        config: cfg.entries().clone(),
        per_epoch,
        bias_stats: bias,
        final_test_accuracy: SeedSummary::new(
            runs.iter().map(|r| r.seed).collect(),
            runs.iter().map(|r| r.evaluation.test_acc).collect(),
        ),
        final_relevance_path: None,
    })
}

/// Load data, train every seed and aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let prep = prepare(cfg)?;
    let runs = run_seeds(cfg, &prep)?;
    summarize(cfg, &prep.dataset, &runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_csr;

    fn tiny(extra: &str) -> ExperimentConfig {
        let base = "sbm.blocks = 3\nsbm.nodes_per_block = 20\nsbm.p_in = 0.3\nsbm.p_out = 0.02\nsbm.feature_dim = 4\n\
                    sampler.num_parts = 6\nmodel.hidden = 8\ntrain.epochs = 3\n";
        ExperimentConfig::parse(&format!("{base}{extra}")).unwrap()
    }

    #[test]
    fn record_per_epoch() {
        let report = run_experiment(&tiny("")).unwrap();
        assert_eq!(report.per_epoch.len(), 3);
        for r in &report.per_epoch {
            assert!((0.0..=1.0).contains(&r.test_acc) && (0.0..=1.0).contains(&r.train_acc));
        }
        assert_eq!(report.final_test_accuracy.seeds, vec![0]);
    }

    #[test]
    fn degenerate_als_equals_plain() {
        let plain = run_experiment(&tiny("loss.mode = plain")).unwrap();
        let als = run_experiment(&tiny("loss.mode = als\npacing.kind = constant\npacing.alpha = 0\nloss.gamma = 0")).unwrap();
        assert_eq!(plain.per_epoch, als.per_epoch);
    }

    #[test]
    fn no_pacing_is_constant() {
        let report = run_experiment(&tiny("ablation.no_pacing = true")).unwrap();
        assert!(report.per_epoch.iter().all(|r| r.alpha_t == 0.1));
    }

    #[test]
    fn reproducible() {
        let cfg = tiny("train.num_seeds = 2");
        let a = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_batch_train_loss_is_initial_objective() {
        let cfg = tiny("sampler.kind = full\nmodel.dropout = 0\ntrain.epochs = 1");
        let prep = prepare(&cfg).unwrap();
        let run = train_seed(&cfg, &prep, 4).unwrap();
        let d = &prep.dataset;
        let params = ModelParams::init(&cfg.model, prep.features.cols(), d.num_classes(), 4).unwrap();
        let w = RefinementMatrix::random(d.num_classes(), 4);
        let (logits, _) = forward(&params, &Batch::full(d), &prep.features, false, 0).unwrap();
        let train = d.train_nodes();
        let labels: Vec<usize> = train.iter().map(|&i| d.label(i)).collect();
        let inputs = prep.soft_inputs.as_ref().unwrap().gather_rows(train);
        let out = loss_and_grads(
            &logits.gather_rows(train),
            &labels,
            Some(SoftTarget::Refined { w: &w, inputs: &inputs }),
            &LossConfig {
                mode: LossMode::Als,
                alpha: cfg.alpha_at(0),
                gamma: cfg.gamma,
                detach_soft_target: false,
            },
        )
        .unwrap();
        assert!((run.records[0].train_loss - out.breakdown.total).abs() < 1e-12);
    }

    #[test]
    fn label_input_examples() {
        let d = Dataset::new(
            build_csr(&[(0, 1)], 3, true).unwrap(),
            DenseMatrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 3.0], vec![7.0, 8.0]]).unwrap(),
            vec![Some(0), Some(1), None],
            2,
            vec![crate::data::Split::Train, crate::data::Split::Test, crate::data::Split::Unused],
        )
        .unwrap();
        let yk = propagate(d.graph(), &init_label_matrix(&d), &Default::default()).unwrap();
        let out = label_input_features(&d, &yk).unwrap();
        assert_eq!(out.cols(), 4);
        for r in 0..3 {
            let orig: Vec<u64> = d.features().row(r).iter().map(|v| v.to_bits()).collect();
            let lead: Vec<u64> = out.row(r)[..2].iter().map(|v| v.to_bits()).collect();
            assert_eq!(orig, lead);
        }
        // node 2 has no edges and no label
        assert_eq!(&out.row(2)[2..], &[0.0, 0.0]);
        let wrong = SoftLabelMatrix::new(DenseMatrix::zeros(2, 2)).unwrap();
        assert!(label_input_features(&d, &wrong).is_err());
    }

    #[test]
    fn relevance_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rel.csv");
        export_relevance(&RefinementMatrix::zeros(4), &path).unwrap();
        let m = io::read_matrix_csv(&path).unwrap();
        assert!(m.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));

        let w = RefinementMatrix::random(5, 3);
        export_relevance(&w, &path).unwrap();
        let m = io::read_matrix_csv(&path).unwrap();
        for c in 0..5 {
            assert!((m.row(c).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let mut e = vec![0.0; 5];
            e[c] = 1.0;
            let direct = crate::smoothing::refine_soft_label(&w, &e).unwrap();
            for (a, b) in m.row(c).iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(export_relevance(&w, &dir.path().join("missing/rel.csv")).is_err());
    }
}
