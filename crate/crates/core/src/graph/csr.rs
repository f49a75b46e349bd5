use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Normalization applied by [`normalized_spmm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// `D⁻¹A·M`; rows of degree-zero nodes are zero.
    RowNorm,
    /// `D̃^{-1/2}(A + I)D̃^{-1/2}·M`, the GCN operator.
    SymNormSelfLoops,
}

/// Unweighted sparse adjacency in canonical compressed-row form.
///
/// Column indices within each row are strictly increasing, so two graphs
/// with the same edge set compare equal field by field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsrGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl CsrGraph {
    /// Build from an edge list. With `symmetrize`, every `(u, v)` also adds
    /// `(v, u)`. Duplicate edges collapse.
    pub fn from_edges(edges: &[(usize, usize)], num_nodes: usize, symmetrize: bool) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidArgument("graph must have at least one node".into()));
        }
        let mut pairs = Vec::with_capacity(edges.len() * if symmetrize { 2 } else { 1 });
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= num_nodes {
                    return Err(Error::NodeOutOfRange { id, num_nodes });
                }
            }
            pairs.push((u, v));
            if symmetrize && u != v {
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &pairs {
            row_offsets[u + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = pairs.into_iter().map(|(_, v)| v).collect();
        Ok(Self {
            num_nodes,
            row_offsets,
            col_indices,
        })
    }

    /// Assemble from raw arrays, validating the canonical-form invariants.
    pub fn from_parts(num_nodes: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>) -> Result<Self> {
        if row_offsets.len() != num_nodes + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidArgument("row_offsets must have length num_nodes + 1 and start at 0".into()));
        }
        if row_offsets[num_nodes] != col_indices.len() {
            return Err(Error::InvalidArgument("row_offsets[num_nodes] != nnz".into()));
        }
        for i in 0..num_nodes {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidArgument("row_offsets must be nondecreasing".into()));
            }
            let row = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!("row {i} is not strictly increasing")));
            }
            if let Some(&id) = row.iter().find(|&&c| c >= num_nodes) {
                return Err(Error::NodeOutOfRange { id, num_nodes });
            }
        }
        Ok(Self {
            num_nodes,
            row_offsets,
            col_indices,
        })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of stored (directed) entries, `‖A‖₀`.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// `A + I` (self loops added where missing).
    pub fn with_self_loops(&self) -> Self {
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        edges.extend((0..self.num_nodes).map(|i| (i, i)));
        Self::from_edges(&edges, self.num_nodes, false).expect("ids already validated")
    }

    /// Dense 0/1 adjacency, for tests and small oracles.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.num_nodes, self.num_nodes);
        for (u, v) in self.edges() {
            m.set(u, v, 1.0);
        }
        m
    }
}

/// Free-function form of [`CsrGraph::from_edges`].
pub fn build_csr(edges: &[(usize, usize)], num_nodes: usize, symmetrize: bool) -> Result<CsrGraph> {
    CsrGraph::from_edges(edges, num_nodes, symmetrize)
}

fn check_rows(g: &CsrGraph, m: &DenseMatrix) -> Result<()> {
    if m.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, graph has {} nodes",
            m.rows(),
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Normalized sparse-dense product; see [`NormMode`].
pub fn normalized_spmm(g: &CsrGraph, m: &DenseMatrix, mode: NormMode) -> Result<DenseMatrix> {
    normalized_spmm_masked(g, m, mode, None)
}

/// Like [`normalized_spmm`] but only computes rows where `mask` is true;
/// all other output rows are zero.
pub fn normalized_spmm_masked(
    g: &CsrGraph,
    m: &DenseMatrix,
    mode: NormMode,
    mask: Option<&[bool]>,
) -> Result<DenseMatrix> {
    check_rows(g, m)?;
    if let Some(mask) = mask {
        if mask.len() != g.num_nodes() {
            return Err(Error::DimensionMismatch("row mask length".into()));
        }
    }
    let cols = m.cols();
    let mut out = DenseMatrix::zeros(g.num_nodes(), cols);
    if cols == 0 {
        return Ok(out);
    }
    let inv_sqrt: Vec<f64> = match mode {
        NormMode::RowNorm => Vec::new(),
        NormMode::SymNormSelfLoops => (0..g.num_nodes())
            .map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt())
            .collect(),
    };
    out.values_mut()
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, out_row)| {
            if mask.is_some_and(|mk| !mk[i]) {
                return;
            }
            let nbrs = g.neighbors(i);
            match mode {
                NormMode::RowNorm => {
                    if nbrs.is_empty() {
                        return;
                    }
                    for &j in nbrs {
                        for (o, &x) in out_row.iter_mut().zip(m.row(j)) {
                            *o += x;
                        }
                    }
                    let inv = 1.0 / nbrs.len() as f64;
                    out_row.iter_mut().for_each(|o| *o *= inv);
                }
                NormMode::SymNormSelfLoops => {
                    let di = inv_sqrt[i];
                    for (o, &x) in out_row.iter_mut().zip(m.row(i)) {
                        *o += di * di * x;
                    }
                    for &j in nbrs {
                        let w = di * inv_sqrt[j];
                        for (o, &x) in out_row.iter_mut().zip(m.row(j)) {
                            *o += w * x;
                        }
                    }
                }
            }
        });
    Ok(out)
}

/// `Âᵀ·M` for the operator `Â` selected by `mode`, restricted to the
/// contributions of source rows where `mask` is true. This is the adjoint
/// of [`normalized_spmm_masked`] with the same mask.
pub fn normalized_spmm_transpose_masked(
    g: &CsrGraph,
    m: &DenseMatrix,
    mode: NormMode,
    mask: Option<&[bool]>,
) -> Result<DenseMatrix> {
    check_rows(g, m)?;
    let cols = m.cols();
    let mut out = DenseMatrix::zeros(g.num_nodes(), cols);
    let inv_sqrt: Vec<f64> = match mode {
        NormMode::RowNorm => Vec::new(),
        NormMode::SymNormSelfLoops => (0..g.num_nodes())
            .map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt())
            .collect(),
    };
    for i in 0..g.num_nodes() {
        if mask.is_some_and(|mk| !mk[i]) {
            continue;
        }
        let nbrs = g.neighbors(i);
        let src = m.row(i).to_vec();
        match mode {
            NormMode::RowNorm => {
                if nbrs.is_empty() {
                    continue;
                }
                let inv = 1.0 / nbrs.len() as f64;
                for &j in nbrs {
                    for (o, &x) in out.row_mut(j).iter_mut().zip(&src) {
                        *o += inv * x;
                    }
                }
            }
            NormMode::SymNormSelfLoops => {
                let di = inv_sqrt[i];
                for (o, &x) in out.row_mut(i).iter_mut().zip(&src) {
                    *o += di * di * x;
                }
                for &j in nbrs {
                    let w = di * inv_sqrt[j];
                    for (o, &x) in out.row_mut(j).iter_mut().zip(&src) {
                        *o += w * x;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Subgraph induced by `nodes`. Local node `k` is global node `nodes[k]`;
/// the returned id array is that mapping.
pub fn induced_subgraph(g: &CsrGraph, nodes: &[usize]) -> Result<(CsrGraph, Vec<usize>)> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("induced subgraph needs at least one node".into()));
    }
    let mut local = vec![usize::MAX; g.num_nodes()];
    for (k, &v) in nodes.iter().enumerate() {
        if v >= g.num_nodes() {
            return Err(Error::NodeOutOfRange {
                id: v,
                num_nodes: g.num_nodes(),
            });
        }
        if local[v] != usize::MAX {
            return Err(Error::InvalidArgument(format!("duplicate node {v} in induced subgraph")));
        }
        local[v] = k;
    }
    let mut row_offsets = Vec::with_capacity(nodes.len() + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::new();
    let mut row = Vec::new();
    for &v in nodes {
        row.clear();
        row.extend(g.neighbors(v).iter().map(|&u| local[u]).filter(|&k| k != usize::MAX));
        row.sort_unstable();
        col_indices.extend_from_slice(&row);
        row_offsets.push(col_indices.len());
    }
    let sub = CsrGraph {
        num_nodes: nodes.len(),
        row_offsets,
        col_indices,
    };
    Ok((sub, nodes.to_vec()))
}
