use crate::error::{Error, Result};
use crate::graph::{normalized_spmm, CsrGraph, DenseMatrix, NormMode};

/// `[X | ÂX | … | Â^hops X]` with the self-looped symmetric operator.
pub fn sign_precompute(g: &CsrGraph, x: &DenseMatrix, hops: usize) -> Result<DenseMatrix> {
    if x.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {} nodes",
            x.rows(),
            g.num_nodes()
        )));
    }
    let mut out = x.clone();
    let mut current = x.clone();
    for _ in 0..hops {
        current = normalized_spmm(g, &current, NormMode::SymNormSelfLoops)?;
        out = out.hconcat(&current)?;
    }
    Ok(out)
}
