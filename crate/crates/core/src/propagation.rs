//! Label propagation as a preprocessing step.
//!
//! Starting from the one-hot training labels `Y⁰`, each iteration computes
//! `Yᵏ⁺¹ = (1 − β)·D⁻¹A·Yᵏ + β·Y⁰`. The result is the neighborhood label
//! prior consumed by the refinement loss, and on its own is the
//! parameter-free propagation baseline.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{normalized_spmm, CsrGraph, DenseMatrix, NormMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Residual strength re-injecting `Y⁰`, in `[0, 1]`.
    pub beta: f64,
    /// Number of iterations.
    pub k: usize,
    /// Propagate over `A + I` instead of `A`. Off by default since the
    /// residual term already re-injects each node's own label.
    pub add_self_loops: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            k: 2,
            add_self_loops: false,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!("beta = {} must lie in [0, 1]", self.beta)));
        }
        Ok(())
    }
}

/// `N × C` matrix of propagated label mass. Entries lie in `[0, 1]` and
/// row sums never exceed 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelMatrix(DenseMatrix);

impl SoftLabelMatrix {
    pub fn new(values: DenseMatrix) -> Result<Self> {
        for (i, row) in values.row_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) || row.iter().sum::<f64>() > 1.0 + 1e-9 {
                return Err(Error::InvalidArgument(format!("row {i} is not a sub-distribution")));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }
}

/// One-hot rows for training nodes, zero rows elsewhere.
pub fn init_label_matrix(d: &Dataset) -> SoftLabelMatrix {
    let mut y = DenseMatrix::zeros(d.num_nodes(), d.num_classes());
    for &i in d.train_nodes() {
        y.set(i, d.label(i), 1.0);
    }
    SoftLabelMatrix(y)
}

/// Run exactly `cfg.k` propagation iterations from `y0`.
pub fn propagate(g: &CsrGraph, y0: &SoftLabelMatrix, cfg: &PropagationConfig) -> Result<SoftLabelMatrix> {
    cfg.validate()?;
    if y0.num_nodes() != g.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "label matrix has {} rows, graph has {} nodes",
            y0.num_nodes(),
            g.num_nodes()
        )));
    }
    let looped;
    let g = if cfg.add_self_loops {
        looped = g.with_self_loops();
        &looped
    } else {
        g
    };
    let keep = 1.0 - cfg.beta;
    let mut y = y0.0.clone();
    for _ in 0..cfg.k {
        let mut next = normalized_spmm(g, &y, NormMode::RowNorm)?;
        for (n, &r) in next.values_mut().iter_mut().zip(y0.0.values()) {
            *n = keep * *n + cfg.beta * r;
        }
        y = next;
    }
    Ok(SoftLabelMatrix(y))
}

/// Row-wise argmax with ties toward the lowest class. All-zero rows abstain
/// (`None`).
pub fn predict_by_propagation(yk: &SoftLabelMatrix) -> Vec<Option<usize>> {
    yk.0.row_iter()
        .map(|row| {
            if row.iter().all(|&v| v == 0.0) {
                return None;
            }
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            Some(best)
        })
        .collect()
}

/// Accuracy of propagation predictions over `nodes`; abstentions count as
/// errors.
pub fn propagation_accuracy(pred: &[Option<usize>], d: &Dataset, nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let hits = nodes.iter().filter(|&&i| pred[i] == d.labels()[i]).count();
    hits as f64 / nodes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_sbm, SbmParams};
    use crate::graph::build_csr;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_graph(n: usize, p: f64, seed: u64) -> CsrGraph {
        let mut rng = crate::rng::stream(seed, &[99]);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        build_csr(&edges, n, true).unwrap()
    }

    fn random_y0(n: usize, c: usize, seed: u64) -> SoftLabelMatrix {
        let mut rng = crate::rng::stream(seed, &[98]);
        let mut y = DenseMatrix::zeros(n, c);
        for i in 0..n {
            if rng.random_bool(0.5) {
                y.set(i, rng.random_range(0..c), 1.0);
            }
        }
        SoftLabelMatrix(y)
    }

    /// Dense iteration with an explicitly materialized `D⁻¹A`.
    fn dense_oracle(g: &CsrGraph, y0: &DenseMatrix, beta: f64, k: usize) -> DenseMatrix {
        let n = g.num_nodes();
        let mut p = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if g.has_edge(i, j) {
                    p.set(i, j, 1.0 / g.degree(i) as f64);
                }
            }
        }
        let mut y = y0.clone();
        for _ in 0..k {
            let mut next = p.matmul(&y).unwrap();
            for (a, b) in next.values_mut().iter_mut().zip(y0.values()) {
                *a = (1.0 - beta) * *a + beta * b;
            }
            y = next;
        }
        y
    }

    #[test]
    fn init_matrix() {
        let d = generate_sbm(&SbmParams {
            blocks: 3,
            nodes_per_block: 8,
            train_fraction: 0.5,
            ..SbmParams::default()
        })
        .unwrap();
        let y0 = init_label_matrix(&d);
        assert_eq!(y0.values().sum(), d.train_nodes().len() as f64);
        for i in 0..d.num_nodes() {
            let expect: Vec<f64> = (0..3)
                .map(|c| if d.is_train(i) && d.label(i) == c { 1.0 } else { 0.0 })
                .collect();
            assert_eq!(y0.row(i), expect.as_slice());
        }
    }

    #[test]
    fn beta_one_returns_initial() {
        let g = random_graph(15, 0.3, 1);
        let y0 = random_y0(15, 3, 1);
        for k in [0, 1, 5] {
            let cfg = PropagationConfig { beta: 1.0, k, add_self_loops: false };
            assert_eq!(propagate(&g, &y0, &cfg).unwrap(), y0);
        }
    }

    #[test]
    fn zero_iterations_is_identity() {
        let g = random_graph(10, 0.3, 2);
        let y0 = random_y0(10, 4, 2);
        let cfg = PropagationConfig { beta: 0.3, k: 0, add_self_loops: false };
        assert_eq!(propagate(&g, &y0, &cfg).unwrap(), y0);
    }

    #[test]
    fn single_edge_hand_check() {
        let g = build_csr(&[(0, 1)], 2, true).unwrap();
        let y0 = SoftLabelMatrix(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        let cfg = PropagationConfig { beta: 0.5, k: 1, add_self_loops: false };
        let y1 = propagate(&g, &y0, &cfg).unwrap();
        assert_eq!(y1.values().values(), &[0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn matches_dense_iteration() {
        let g = random_graph(20, 0.2, 3);
        let y0 = random_y0(20, 3, 3);
        let cfg = PropagationConfig { beta: 0.2, k: 4, add_self_loops: false };
        let got = propagate(&g, &y0, &cfg).unwrap();
        assert!(got.values().max_abs_diff(&dense_oracle(&g, y0.values(), 0.2, 4)) < 1e-12);
    }

    #[test]
    fn self_loop_override_matches_dense() {
        let g = random_graph(12, 0.3, 4);
        let y0 = random_y0(12, 3, 4);
        let cfg = PropagationConfig { beta: 0.1, k: 3, add_self_loops: true };
        let got = propagate(&g, &y0, &cfg).unwrap();
        let oracle = dense_oracle(&g.with_self_loops(), y0.values(), 0.1, 3);
        assert!(got.values().max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn errors() {
        let g = random_graph(5, 0.5, 5);
        let y0 = random_y0(4, 2, 5);
        assert!(propagate(&g, &y0, &PropagationConfig::default()).is_err());
        let y0 = random_y0(5, 2, 5);
        let bad = PropagationConfig { beta: 1.5, k: 1, add_self_loops: false };
        assert!(propagate(&g, &y0, &bad).is_err());
    }

    #[test]
    fn argmax_ties_and_abstain() {
        let yk = SoftLabelMatrix(DenseMatrix::from_rows(&[vec![0.2, 0.2, 0.1], vec![0.0, 0.0, 0.0], vec![0.0, 0.1, 0.3]]).unwrap());
        assert_eq!(predict_by_propagation(&yk), vec![Some(0), None, Some(2)]);
    }

    #[test]
    fn reachable_nodes_get_their_block() {
        let d = generate_sbm(&SbmParams {
            blocks: 4,
            nodes_per_block: 12,
            p_in: 0.4,
            p_out: 0.0,
            train_fraction: 1.0 / 12.0,
            val_fraction: 0.0,
            seed: 8,
            ..SbmParams::default()
        })
        .unwrap();
        assert_eq!(d.train_nodes().len(), 4);
        let cfg = PropagationConfig { beta: 0.1, k: 12, add_self_loops: false };
        let yk = propagate(d.graph(), &init_label_matrix(&d), &cfg).unwrap();
        let pred = predict_by_propagation(&yk);
        for (i, p) in pred.iter().enumerate() {
            if let Some(c) = p {
                assert_eq!(*c, d.label(i));
            }
        }
    }

    proptest! {
        #[test]
        fn entries_stay_bounded(n in 2usize..25, c in 1usize..5, beta in 0.0f64..=1.0, k in 0usize..10, seed in any::<u64>()) {
            let g = random_graph(n, 0.25, seed);
            let y0 = random_y0(n, c, seed);
            let cfg = PropagationConfig { beta, k, add_self_loops: false };
            let y = propagate(&g, &y0, &cfg).unwrap();
            for row in y.values().row_iter() {
                prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
                prop_assert!(row.iter().sum::<f64>() <= 1.0 + 1e-12);
            }
            prop_assert!(SoftLabelMatrix::new(y.into_inner()).is_ok());
        }
    }

    #[test]
    fn successive_differences_do_not_grow() {
        for seed in 0..50 {
            let mut rng = crate::rng::stream(seed, &[97]);
            let n = rng.random_range(5..30);
            // path backbone keeps the graph connected
            let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
            for _ in 0..n {
                edges.push((rng.random_range(0..n), rng.random_range(0..n)));
            }
            let g = build_csr(&edges, n, true).unwrap();
            let y0 = random_y0(n, 3, seed);
            let beta = rng.random_range(0.05..1.0);
            let iterates: Vec<SoftLabelMatrix> = (0..=32)
                .map(|k| propagate(&g, &y0, &PropagationConfig { beta, k, add_self_loops: false }).unwrap())
                .collect();
            let gaps: Vec<f64> = iterates.windows(2).map(|w| w[1].values().max_abs_diff(w[0].values())).collect();
            for (k, w) in gaps.windows(2).enumerate() {
                assert!(w[1] <= w[0] + 1e-15, "seed {seed}, k {k}: {} > {}", w[1], w[0]);
            }
        }
    }
}
