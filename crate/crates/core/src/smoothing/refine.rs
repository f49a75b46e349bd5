use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::DenseMatrix;
use crate::rng::{stream, tag};

/// Standard deviation of the Gaussian initialization of `W`.
pub const REFINEMENT_INIT_STD: f64 = 0.01;

/// Trainable `C × C` class-relevance matrix `W` and its gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementMatrix {
    pub w: DenseMatrix,
    pub grad: DenseMatrix,
}

impl RefinementMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        Self {
            w: DenseMatrix::zeros(num_classes, num_classes),
            grad: DenseMatrix::zeros(num_classes, num_classes),
        }
    }

    /// I.i.d. `N(0, 0.01²)` entries drawn from the refinement stream of `seed`.
    pub fn random(num_classes: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[tag::REFINEMENT_INIT]);
        let normal = Normal::new(0.0, REFINEMENT_INIT_STD).expect("valid stddev");
        let mut m = Self::zeros(num_classes);
        m.w.values_mut().iter_mut().for_each(|v| *v = normal.sample(&mut rng));
        m
    }

    pub fn from_weights(w: DenseMatrix) -> Result<Self> {
        if w.rows() != w.cols() {
            return Err(Error::DimensionMismatch(format!("refinement matrix is {}x{}", w.rows(), w.cols())));
        }
        if !w.is_finite() {
            return Err(Error::NonFinite("refinement matrix".into()));
        }
        let c = w.rows();
        Ok(Self {
            w,
            grad: DenseMatrix::zeros(c, c),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.w.rows()
    }

    /// Relevance profile of every class: row `c` is the soft label a pure
    /// class-`c` neighborhood receives, `Softmax(W · e_c)`.
    pub fn relevance(&self) -> DenseMatrix {
        let c = self.num_classes();
        let wt = self.w.transpose();
        let mut out = DenseMatrix::zeros(c, c);
        for r in 0..c {
            out.row_mut(r).copy_from_slice(&softmax(wt.row(r)));
        }
        out
    }
}

/// Max-subtracted softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// `W · y` for one row `y`.
pub(crate) fn matvec(w: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    w.row_iter()
        .map(|wr| wr.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect()
}

/// `y_soft = Softmax(W · y_k)`.
pub fn refine_soft_label(w: &RefinementMatrix, yk_row: &[f64]) -> Result<Vec<f64>> {
    if yk_row.len() != w.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "row of length {} for {} classes",
            yk_row.len(),
            w.num_classes()
        )));
    }
    if yk_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("propagated label row".into()));
    }
    Ok(softmax(&matvec(&w.w, yk_row)))
}
