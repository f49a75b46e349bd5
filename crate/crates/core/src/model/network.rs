use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalized_spmm_masked, normalized_spmm_transpose_masked, CsrGraph, DenseMatrix, NormMode};
use crate::rng::{stream, tag};
use crate::sampling::Batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    /// Symmetric-normalized aggregation, then affine, then ReLU.
    Gcn,
    /// Affine then ReLU; ignores the graph.
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Number of affine layers.
    pub depth: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Gcn,
            depth: 3,
            hidden: 64,
            dropout: 0.5,
        }
    }
}

/// Weight (`in × out`) and bias of one layer. Also used for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }
}

/// Classifier parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Arch,
    dropout: f64,
    layers: Vec<Layer>,
    version: u64,
}

/// Gradients with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub layers: Vec<Layer>,
}

impl ModelGrads {
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.values(), l.bias.as_slice()])
            .collect()
    }

    pub fn add(&mut self, other: &ModelGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.add_scaled(&b.weight, 1.0).expect("same shapes");
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases from the init stream of `seed`.
    pub fn init(cfg: &ModelConfig, in_dim: usize, num_classes: usize, seed: u64) -> Result<Self> {
        if cfg.depth == 0 {
            return Err(Error::InvalidArgument("model depth must be at least 1".into()));
        }
        if cfg.depth > 1 && cfg.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be positive".into()));
        }
        if !(0.0..1.0).contains(&cfg.dropout) {
            return Err(Error::InvalidArgument(format!("dropout = {} must lie in [0, 1)", cfg.dropout)));
        }
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat_n(cfg.hidden, cfg.depth - 1));
        dims.push(num_classes);
        let mut rng = stream(seed, &[tag::MODEL_INIT]);
        let layers = dims
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let mut layer = Layer::zeros(w[0], w[1]);
                layer
                    .weight
                    .values_mut()
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-bound..=bound));
                layer
            })
            .collect();
        Ok(Self {
            arch: cfg.arch,
            dropout: cfg.dropout,
            layers,
            version: 0,
        })
    }

    /// Parameters from explicit layers; consecutive widths must chain.
    pub fn from_layers(arch: Arch, dropout: f64, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weight.cols() {
                return Err(Error::DimensionMismatch(format!("layer {i} bias width")));
            }
            if i > 0 && layers[i - 1].weight.cols() != l.weight.rows() {
                return Err(Error::DimensionMismatch(format!("layer {i} input width")));
            }
        }
        Ok(Self {
            arch,
            dropout,
            layers,
            version: 0,
        })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("nonempty").weight.cols()
    }

    /// Counter bumped on every mutable access; caches from older versions
    /// are rejected by [`backward`].
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Mutable views of every parameter tensor, in [`ModelGrads::tensors`]
    /// order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.values_mut(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weight.rows(), l.weight.cols()))
                .collect(),
        }
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    graph: Option<CsrGraph>,
    /// Per layer: the (aggregated) input the affine map was applied to.
    inputs: Vec<DenseMatrix>,
    /// Per layer: pre-activations.
    pre: Vec<DenseMatrix>,
    /// Per hidden layer: dropout scale per entry (0 or 1/(1 − p)).
    dropout: Vec<Option<Vec<f64>>>,
    /// Per layer: rows that were evaluated.
    row_masks: Vec<Option<Vec<bool>>>,
}

impl ForwardCache {
    pub fn num_nodes(&self) -> usize {
        self.pre[0].rows()
    }

    /// Hidden-layer ReLU activation pattern, used to detect kinks.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.pre[..self.pre.len() - 1]
            .iter()
            .flat_map(|z| z.values().iter().map(|&v| v > 0.0))
            .collect()
    }
}

fn affine(x: &DenseMatrix, layer: &Layer, mask: Option<&[bool]>) -> Result<DenseMatrix> {
    let mut z = x.matmul(&layer.weight)?;
    for r in 0..z.rows() {
        let row = z.row_mut(r);
        if mask.is_some_and(|m| !m[r]) {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            row.iter_mut().zip(&layer.bias).for_each(|(v, b)| *v += b);
        }
    }
    Ok(z)
}

/// Logits for every node of `batch`.
///
/// `features` holds one row per batch node (aligned with
/// `batch.global_ids()`). Dropout is applied after each hidden ReLU in
/// `train_mode` only, drawn from the dropout stream of `seed`. For
/// neighbor-sampled batches, layer `l` is evaluated only on nodes within
/// `L − 1 − l` hops of the seeds; other rows are zero.
pub fn forward(
    params: &ModelParams,
    batch: &Batch,
    features: &DenseMatrix,
    train_mode: bool,
    seed: u64,
) -> Result<(DenseMatrix, ForwardCache)> {
    let n = batch.num_nodes();
    if features.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for a batch of {n} nodes",
            features.rows()
        )));
    }
    if features.cols() != params.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature width {} but model expects {}",
            features.cols(),
            params.in_dim()
        )));
    }
    let depth = params.depth();
    let gcn = params.arch == Arch::Gcn;
    let graph = batch.subgraph();
    let mut cache = ForwardCache {
        version: params.version,
        graph: gcn.then(|| graph.clone()),
        inputs: Vec::with_capacity(depth),
        pre: Vec::with_capacity(depth),
        dropout: Vec::with_capacity(depth),
        row_masks: Vec::with_capacity(depth),
    };
    let mut h = features.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let mask: Option<Vec<bool>> = match (gcn, batch.depth()) {
            (true, Some(d)) => Some(d.iter().map(|&hop| hop + l < depth).collect()),
            _ => None,
        };
        let input = if gcn {
            normalized_spmm_masked(graph, &h, NormMode::SymNormSelfLoops, mask.as_deref())?
        } else {
            h
        };
        let z = affine(&input, layer, mask.as_deref())?;
        cache.inputs.push(input);
        if l + 1 == depth {
            cache.pre.push(z);
            cache.row_masks.push(mask);
            break;
        }
        let mut a = z.clone();
        a.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        let drop = if train_mode && params.dropout > 0.0 {
            let mut rng = stream(seed, &[tag::DROPOUT, l as u64]);
            let keep = 1.0 - params.dropout;
            let scale: Vec<f64> = (0..a.values().len())
                .map(|_| if rng.random_bool(keep) { 1.0 / keep } else { 0.0 })
                .collect();
            a.values_mut().iter_mut().zip(&scale).for_each(|(v, s)| *v *= s);
            Some(scale)
        } else {
            None
        };
        cache.pre.push(z);
        cache.dropout.push(drop);
        cache.row_masks.push(mask);
        h = a;
    }
    let logits = cache.pre.last().expect("at least one layer").clone();
    Ok((logits, cache))
}

/// Exact gradients of `Σ⟨dlogits, logits⟩` with respect to every parameter.
pub fn backward(params: &ModelParams, cache: &ForwardCache, dlogits: &DenseMatrix) -> Result<ModelGrads> {
    if cache.version != params.version || cache.pre.len() != params.depth() {
        return Err(Error::StaleCache(format!(
            "cache from parameter version {}, parameters at {}",
            cache.version, params.version
        )));
    }
    let out = cache.pre.last().expect("nonempty");
    if dlogits.rows() != out.rows() || dlogits.cols() != out.cols() {
        return Err(Error::DimensionMismatch(format!(
            "dlogits {}x{} for logits {}x{}",
            dlogits.rows(),
            dlogits.cols(),
            out.rows(),
            out.cols()
        )));
    }
    let mut grads = params.zero_grads();
    let mut dz = dlogits.clone();
    for l in (0..params.depth()).rev() {
        let mask = cache.row_masks[l].as_deref();
        if let Some(m) = mask {
            for r in 0..dz.rows() {
                if !m[r] {
                    dz.row_mut(r).iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
        let g = &mut grads.layers[l];
        g.weight = cache.inputs[l].t_matmul(&dz)?;
        for row in dz.row_iter() {
            g.bias.iter_mut().zip(row).for_each(|(b, v)| *b += v);
        }
        if l == 0 {
            break;
        }
        let dinput = dz.matmul_t(&params.layers[l].weight)?;
        let mut dh = match &cache.graph {
            Some(graph) => normalized_spmm_transpose_masked(graph, &dinput, NormMode::SymNormSelfLoops, mask)?,
            None => dinput,
        };
        if let Some(scale) = &cache.dropout[l - 1] {
            dh.values_mut().iter_mut().zip(scale).for_each(|(v, s)| *v *= s);
        }
        dh.values_mut()
            .iter_mut()
            .zip(cache.pre[l - 1].values())
            .for_each(|(v, &z)| {
                if z <= 0.0 {
                    *v = 0.0;
                }
            });
        dz = dh;
    }
    Ok(grads)
}
