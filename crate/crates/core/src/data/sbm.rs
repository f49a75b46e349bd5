//! Planted-partition (stochastic block model) datasets with Gaussian
//! class-conditional features.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::{build_csr, DenseMatrix};
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Standard deviation of the additive Gaussian feature noise.
    pub feature_noise: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            blocks: 8,
            nodes_per_block: 250,
            p_in: 0.05,
            p_out: 0.002,
            feature_dim: 16,
            feature_noise: 1.0,
            train_fraction: 0.3,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.nodes_per_block == 0 {
            return Err(Error::InvalidArgument("SBM needs at least one block and one node per block".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")));
            }
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidArgument("feature_dim must be positive".into()));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::InvalidArgument("feature_noise must be a finite stddev".into()));
        }
        let (t, v) = (self.train_fraction, self.val_fraction);
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&v) || t + v > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "split fractions train={t} val={v} must lie in [0,1] and sum to at most 1"
            )));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.blocks * self.nodes_per_block
    }
}

/// Generate a dataset whose labels are the planted blocks.
pub fn generate_sbm(params: &SbmParams) -> Result<Dataset> {
    params.validate()?;
    let n = params.num_nodes();
    let block = |i: usize| i / params.nodes_per_block;

    let mut rng = stream(params.seed, &[tag::SBM_EDGES]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block(i) == block(j) { params.p_in } else { params.p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let graph = build_csr(&edges, n, true)?;

    let mut rng = stream(params.seed, &[tag::SBM_FEATURES]);
    let noise = Normal::new(0.0, params.feature_noise)
        .map_err(|e| Error::InvalidArgument(format!("feature noise: {e}")))?;
    let mut features = DenseMatrix::zeros(n, params.feature_dim);
    for i in 0..n {
        let hot = block(i) % params.feature_dim;
        for (c, x) in features.row_mut(i).iter_mut().enumerate() {
            *x = if c == hot { 1.0 } else { 0.0 } + noise.sample(&mut rng);
        }
    }

    let mut rng = stream(params.seed, &[tag::SBM_SPLITS]);
    let npb = params.nodes_per_block;
    let n_train = ((params.train_fraction * npb as f64).round() as usize).min(npb);
    let n_val = ((params.val_fraction * npb as f64).round() as usize).min(npb - n_train);
    let mut split = vec![Split::Test; n];
    for b in 0..params.blocks {
        let mut members: Vec<usize> = (b * npb..(b + 1) * npb).collect();
        members.shuffle(&mut rng);
        for (k, &v) in members.iter().enumerate() {
            split[v] = if k < n_train {
                Split::Train
            } else if k < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }

    let labels = (0..n).map(|i| Some(block(i))).collect();
    Dataset::new(graph, features, labels, params.blocks, split)
}
