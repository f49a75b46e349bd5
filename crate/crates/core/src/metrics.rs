//! Batch label bias and prediction confidence.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;
use crate::sampling::Batch;

/// Per-class mean and sample standard deviation of the batch class
/// fraction `p_c` across batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub num_batches: usize,
}

impl BiasStats {
    /// Mean over classes of the per-class standard deviation.
    pub fn mean_std(&self) -> f64 {
        if self.std.is_empty() {
            return 0.0;
        }
        self.std.iter().sum::<f64>() / self.std.len() as f64
    }

    /// `class,mean,std` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,mean,std\n");
        for (c, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            out.push_str(&format!("{c},{m},{s}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStats {
    pub mean_max_prob: f64,
    /// Mean Shannon entropy in nats.
    pub mean_entropy: f64,
}

/// Mean and sample (n − 1) standard deviation; the std of fewer than two
/// values is 0.
pub fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fraction of the batch's training nodes in each class.
pub fn batch_class_fraction(b: &Batch, d: &Dataset) -> Result<Vec<f64>> {
    if b.train_local().is_empty() {
        return Err(Error::InvalidArgument("batch has no training nodes".into()));
    }
    let mut counts = vec![0usize; d.num_classes()];
    for g in b.train_global() {
        counts[d.label(g)] += 1;
    }
    let total = b.train_local().len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Spread of `p_c` across batches. Batches without training nodes are
/// skipped.
pub fn bias_stats(batches: &[Batch], d: &Dataset) -> Result<BiasStats> {
    let fractions: Vec<Vec<f64>> = batches
        .iter()
        .filter(|b| !b.train_local().is_empty())
        .map(|b| batch_class_fraction(b, d))
        .collect::<Result<_>>()?;
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("bias statistics need at least one batch with training nodes".into()));
    }
    let (mean, std) = (0..d.num_classes())
        .map(|c| {
            let col: Vec<f64> = fractions.iter().map(|f| f[c]).collect();
            mean_and_sample_std(&col)
        })
        .unzip();
    Ok(BiasStats {
        mean,
        std,
        num_batches: fractions.len(),
    })
}

fn check_distribution(row: &[f64], i: usize) -> Result<()> {
    let s: f64 = row.iter().sum();
    if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (s - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("row {i} is not a probability distribution")));
    }
    Ok(())
}

pub fn confidence_stats(probs: &DenseMatrix) -> Result<ConfidenceStats> {
    if probs.rows() == 0 {
        return Err(Error::InvalidArgument("no rows".into()));
    }
    let mut max_sum = 0.0;
    let mut ent_sum = 0.0;
    for (i, row) in probs.row_iter().enumerate() {
        check_distribution(row, i)?;
        max_sum += row.iter().copied().fold(0.0, f64::max);
        ent_sum -= row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>();
    }
    let n = probs.rows() as f64;
    Ok(ConfidenceStats {
        mean_max_prob: max_sum / n,
        mean_entropy: ent_sum / n,
    })
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}
