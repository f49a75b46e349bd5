//! Sparse graph storage and the normalized sparse-dense kernels.

mod csr;
mod dense;

pub use csr::{
    build_csr, induced_subgraph, normalized_spmm, normalized_spmm_masked,
    normalized_spmm_transpose_masked, CsrGraph, NormMode,
};
pub use dense::DenseMatrix;
