//! Shared helpers for integration tests.
#![allow(dead_code)]

use als_core::data::{generate_sbm, Dataset, SbmParams};
use als_core::graph::DenseMatrix;
use als_core::model::{backward, forward, ModelParams};
use als_core::sampling::Batch;
use als_core::smoothing::{loss_and_grads, LossConfig, RefinementMatrix, SoftTarget};

pub fn small_sbm(blocks: usize, per_block: usize, feature_dim: usize, seed: u64) -> Dataset {
    generate_sbm(&SbmParams {
        blocks,
        nodes_per_block: per_block,
        p_in: 0.4,
        p_out: 0.05,
        feature_dim,
        train_fraction: 0.5,
        val_fraction: 0.0,
        seed,
        ..SbmParams::default()
    })
    .unwrap()
}

/// Everything needed to evaluate the batch objective as a function of the
/// parameters.
pub struct Pipeline<'a> {
    pub batch: &'a Batch,
    pub features: &'a DenseMatrix,
    pub labels: Vec<usize>,
    pub soft_inputs: Option<DenseMatrix>,
    pub loss: LossConfig,
}

impl Pipeline<'_> {
    pub fn objective(&self, params: &ModelParams, w: &RefinementMatrix) -> f64 {
        let (logits, _) = forward(params, self.batch, self.features, false, 0).unwrap();
        let soft = self.soft_inputs.as_ref().map(|inputs| SoftTarget::Refined { w, inputs });
        loss_and_grads(&logits.gather_rows(self.batch.train_local()), &self.labels, soft, &self.loss)
            .unwrap()
            .breakdown
            .total
    }

    /// Analytic gradients: model tensors followed by `W`.
    pub fn gradients(&self, params: &ModelParams, w: &RefinementMatrix) -> Vec<Vec<f64>> {
        let (logits, cache) = forward(params, self.batch, self.features, false, 0).unwrap();
        let soft = self.soft_inputs.as_ref().map(|inputs| SoftTarget::Refined { w, inputs });
        let out = loss_and_grads(&logits.gather_rows(self.batch.train_local()), &self.labels, soft, &self.loss).unwrap();
        let mut dlogits = DenseMatrix::zeros(logits.rows(), logits.cols());
        for (row, &local) in self.batch.train_local().iter().enumerate() {
            dlogits.row_mut(local).copy_from_slice(out.dlogits.row(row));
        }
        let grads = backward(params, &cache, &dlogits).unwrap();
        let mut all: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
        all.push(out.dw.values().to_vec());
        all
    }

    /// Largest relative error between analytic and central-difference
    /// gradients over every parameter, with denominator
    /// `max(|analytic|, |numeric|, floor)`. Entries whose perturbation
    /// flips a ReLU are skipped; returns `(max error, checked, skipped)`.
    pub fn max_relative_error(&self, params: &ModelParams, w: &RefinementMatrix, step: f64, floor: f64) -> (f64, usize, usize) {
        let analytic = self.gradients(params, w);
        let pattern = |p: &ModelParams| {
            let (_, cache) = forward(p, self.batch, self.features, false, 0).unwrap();
            cache.activation_pattern()
        };
        let base_pattern = pattern(params);
        let mut worst = 0.0f64;
        let (mut checked, mut skipped) = (0, 0);
        let num_model = analytic.len() - 1;
        for (t, grad) in analytic.iter().enumerate() {
            for i in 0..grad.len() {
                let (up, down, kink) = if t < num_model {
                    let mut plus = params.clone();
                    plus.tensors_mut()[t][i] += step;
                    let mut minus = params.clone();
                    minus.tensors_mut()[t][i] -= step;
                    let kink = pattern(&plus) != base_pattern || pattern(&minus) != base_pattern;
                    (self.objective(&plus, w), self.objective(&minus, w), kink)
                } else {
                    let mut plus = w.clone();
                    plus.w.values_mut()[i] += step;
                    let mut minus = w.clone();
                    minus.w.values_mut()[i] -= step;
                    (self.objective(params, &plus), self.objective(params, &minus), false)
                };
                if kink {
                    skipped += 1;
                    continue;
                }
                let numeric = (up - down) / (2.0 * step);
                let err = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(floor);
                worst = worst.max(err);
                checked += 1;
            }
        }
        (worst, checked, skipped)
    }
}
