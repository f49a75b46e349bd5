use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, DenseMatrix};

/// Role of a node in the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
    /// Not in any mask.
    Unused,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unused => "unused",
        }
    }
}

/// Graph, node features, labels and the train/val/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    graph: CsrGraph,
    features: DenseMatrix,
    labels: Vec<Option<usize>>,
    num_classes: usize,
    split: Vec<Split>,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl Dataset {
    pub fn new(
        graph: CsrGraph,
        features: DenseMatrix,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        split: Vec<Split>,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {n} nodes",
                features.rows()
            )));
        }
        if labels.len() != n || split.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "labels ({}) and split ({}) must cover {n} nodes",
                labels.len(),
                split.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            match (l, split[i]) {
                (Some(c), _) if *c >= num_classes => {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} has class {c} but num_classes = {num_classes}"
                    )))
                }
                (None, Split::Train | Split::Val | Split::Test) => {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} is in the {} mask but has no label",
                        split[i].as_str()
                    )))
                }
                _ => {}
            }
        }
        let pick = |s: Split| -> Vec<usize> { (0..n).filter(|&i| split[i] == s).collect() };
        let (train, val, test) = (pick(Split::Train), pick(Split::Val), pick(Split::Test));
        Ok(Self {
            graph,
            features,
            labels,
            num_classes,
            split,
            train,
            val,
            test,
        })
    }

    pub fn graph(&self) -> &CsrGraph {
        &self.graph
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Label of a node that is known to carry one (any masked node).
    pub fn label(&self, node: usize) -> usize {
        self.labels[node].expect("node in a mask carries a label")
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn is_train(&self, node: usize) -> bool {
        self.split[node] == Split::Train
    }

    pub fn train_nodes(&self) -> &[usize] {
        &self.train
    }

    pub fn val_nodes(&self) -> &[usize] {
        &self.val
    }

    pub fn test_nodes(&self) -> &[usize] {
        &self.test
    }

    /// Same dataset with a different feature matrix (SIGN, label input).
    pub fn with_features(&self, features: DenseMatrix) -> Result<Self> {
        Self::new(
            self.graph.clone(),
            features,
            self.labels.clone(),
            self.num_classes,
            self.split.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_csr;

    #[test]
    fn masks_require_labels() {
        let g = build_csr(&[(0, 1)], 2, true).unwrap();
        let x = DenseMatrix::zeros(2, 1);
        let err = Dataset::new(g.clone(), x.clone(), vec![Some(0), None], 2, vec![Split::Train, Split::Test]);
        assert!(err.is_err());
        let err = Dataset::new(g.clone(), x.clone(), vec![Some(0), Some(2)], 2, vec![Split::Train, Split::Test]);
        assert!(err.is_err());
        let ok = Dataset::new(g, x, vec![Some(0), None], 2, vec![Split::Train, Split::Unused]).unwrap();
        assert_eq!(ok.train_nodes(), &[0]);
        assert!(ok.test_nodes().is_empty());
    }
}
