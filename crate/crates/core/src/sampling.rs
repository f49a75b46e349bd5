//! Mini-batch construction: cluster batches, random-walk sub-graphs,
//! layered neighbor sampling, uniform random node batches and the full
//! graph.
//!
//! Every sampler is a pure function of its inputs and a 64-bit seed. The
//! harness derives that seed from `(experiment seed, epoch, batch index)`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{build_csr, induced_subgraph, CsrGraph};
use crate::rng::{stream, tag};

/// A training batch: a sub-graph, its local→global node map and the local
/// indices of its training nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    subgraph: CsrGraph,
    global_ids: Vec<usize>,
    train_local: Vec<usize>,
    depth: Option<Vec<usize>>,
}

impl Batch {
    /// Batch over the sub-graph induced by `nodes` (in that order).
    pub fn induced(d: &Dataset, nodes: &[usize]) -> Result<Self> {
        let (subgraph, global_ids) = induced_subgraph(d.graph(), nodes)?;
        let train_local = global_ids
            .iter()
            .enumerate()
            .filter(|(_, &g)| d.is_train(g))
            .map(|(k, _)| k)
            .collect();
        Ok(Self {
            subgraph,
            global_ids,
            train_local,
            depth: None,
        })
    }

    /// The whole graph as one batch.
    pub fn full(d: &Dataset) -> Self {
        Self {
            subgraph: d.graph().clone(),
            global_ids: (0..d.num_nodes()).collect(),
            train_local: d.train_nodes().to_vec(),
            depth: None,
        }
    }

    pub fn subgraph(&self) -> &CsrGraph {
        &self.subgraph
    }

    pub fn global_ids(&self) -> &[usize] {
        &self.global_ids
    }

    pub fn train_local(&self) -> &[usize] {
        &self.train_local
    }

    pub fn num_nodes(&self) -> usize {
        self.global_ids.len()
    }

    /// Training nodes as global ids.
    pub fn train_global(&self) -> Vec<usize> {
        self.train_local.iter().map(|&k| self.global_ids[k]).collect()
    }

    /// Hop distance from the seed nodes, for neighbor-sampled batches. Layer
    /// `l` of an `L`-layer model only needs nodes with depth `≤ L − 1 − l`.
    pub fn depth(&self) -> Option<&[usize]> {
        self.depth.as_deref()
    }

    /// Copy of this batch with local nodes relabeled so that old local
    /// node `k` becomes `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        if perm.len() != n {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let mut global_ids = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            global_ids[p] = self.global_ids[k];
        }
        let edges: Vec<(usize, usize)> = self.subgraph.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        let subgraph = build_csr(&edges, n, false)?;
        let mut train_local: Vec<usize> = self.train_local.iter().map(|&k| perm[k]).collect();
        train_local.sort_unstable();
        let depth = self.depth.as_ref().map(|d| {
            let mut out = vec![0; n];
            for (k, &p) in perm.iter().enumerate() {
                out[p] = d[k];
            }
            out
        });
        Ok(Self {
            subgraph,
            global_ids,
            train_local,
            depth,
        })
    }
}

/// Disjoint assignment of every node to one of `num_parts` parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    part_of: Vec<usize>,
    num_parts: usize,
}

impl Partition {
    pub fn part_of(&self) -> &[usize] {
        &self.part_of
    }

    pub fn num_parts(&self) -> usize {
        self.num_parts
    }

    /// Nodes of each part in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_parts];
        for (v, &p) in self.part_of.iter().enumerate() {
            out[p].push(v);
        }
        out
    }
}

/// Greedy region-growing partitioner.
///
/// Parts are grown one at a time. Each part starts at the next unassigned
/// node in a degree-weighted random order and repeatedly absorbs the
/// frontier node with the most edges into the part (earliest discovered on
/// ties) until it reaches its quota. When a part's frontier dies out it
/// restarts from the next unassigned source. Quotas are `⌈N/P⌉` for the
/// first `N mod P` parts and `⌊N/P⌋` afterwards.
pub fn partition_clusters(g: &CsrGraph, num_parts: usize, seed: u64) -> Result<Partition> {
    let n = g.num_nodes();
    if num_parts == 0 || num_parts > n {
        return Err(Error::InvalidArgument(format!(
            "num_parts = {num_parts} must lie in [1, {n}]"
        )));
    }

    // Efraimidis–Spirakis keys give a weighted random order of sources.
    let mut rng = stream(seed, &[tag::PARTITION]);
    let mut keyed: Vec<(f64, usize)> = (0..n)
        .map(|v| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / (g.degree(v) + 1) as f64, v)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let sources: Vec<usize> = keyed.into_iter().map(|(_, v)| v).collect();

    const UNASSIGNED: usize = usize::MAX;
    let mut part_of = vec![UNASSIGNED; n];
    let mut conn = vec![0usize; n];
    let mut touched = Vec::new();
    let mut next_source = 0;
    let (base, extra) = (n / num_parts, n % num_parts);

    for part in 0..num_parts {
        let quota = base + usize::from(part < extra);
        for &v in &touched {
            conn[v] = 0;
        }
        touched.clear();
        // (connections, earliest discovery) max-heap with lazy deletion
        let mut heap: BinaryHeap<(usize, Reverse<usize>, usize)> = BinaryHeap::new();
        let mut seq = 0usize;
        let mut size = 0;
        while size < quota {
            let v = loop {
                match heap.pop() {
                    Some((c, _, v)) if part_of[v] == UNASSIGNED && conn[v] == c => break Some(v),
                    Some(_) => continue,
                    None => break None,
                }
            };
            let v = match v {
                Some(v) => v,
                None => {
                    while part_of[sources[next_source]] != UNASSIGNED {
                        next_source += 1;
                    }
                    sources[next_source]
                }
            };
            part_of[v] = part;
            size += 1;
            for &u in g.neighbors(v) {
                if part_of[u] == UNASSIGNED {
                    if conn[u] == 0 {
                        touched.push(u);
                    }
                    conn[u] += 1;
                    heap.push((conn[u], Reverse(seq), u));
                    seq += 1;
                }
            }
        }
    }
    Ok(Partition { part_of, num_parts })
}

/// One epoch of cluster batches: parts are shuffled by `seed` and grouped
/// `parts_per_batch` at a time; each batch is the sub-graph induced by the
/// union of its parts.
pub fn cluster_batches(d: &Dataset, p: &Partition, parts_per_batch: usize, seed: u64) -> Result<Vec<Batch>> {
    if p.num_parts() == 0 || p.part_of().len() != d.num_nodes() {
        return Err(Error::InvalidArgument("partition does not cover the dataset".into()));
    }
    if parts_per_batch == 0 || parts_per_batch > p.num_parts() {
        return Err(Error::InvalidArgument(format!(
            "parts_per_batch = {parts_per_batch} must lie in [1, {}]",
            p.num_parts()
        )));
    }
    let members = p.members();
    let mut order: Vec<usize> = (0..p.num_parts()).collect();
    order.shuffle(&mut stream(seed, &[tag::CLUSTER_SHUFFLE]));
    order
        .chunks(parts_per_batch)
        .map(|group| {
            let mut nodes: Vec<usize> = group.iter().flat_map(|&q| members[q].iter().copied()).collect();
            nodes.sort_unstable();
            Batch::induced(d, &nodes)
        })
        .collect()
}

/// Random-walk sub-graph: `num_roots` roots drawn uniformly (with
/// replacement) from the training nodes, each walking `walk_length` uniform
/// steps. Degree-zero nodes stay in place.
pub fn random_walk_sample(d: &Dataset, num_roots: usize, walk_length: usize, seed: u64) -> Result<Batch> {
    let train = d.train_nodes();
    if train.is_empty() {
        return Err(Error::InvalidArgument("random walk sampling needs training nodes".into()));
    }
    if num_roots == 0 {
        return Err(Error::InvalidArgument("num_roots must be positive".into()));
    }
    let g = d.graph();
    let mut rng = stream(seed, &[tag::RANDOM_WALK]);
    let mut visited = vec![false; d.num_nodes()];
    for _ in 0..num_roots {
        let mut v = *train.choose(&mut rng).expect("nonempty");
        visited[v] = true;
        for _ in 0..walk_length {
            if let Some(&u) = g.neighbors(v).choose(&mut rng) {
                v = u;
            }
            visited[v] = true;
        }
    }
    let nodes: Vec<usize> = (0..d.num_nodes()).filter(|&v| visited[v]).collect();
    Batch::induced(d, &nodes)
}

/// Layered neighbor sampling. Starting from `seed_nodes`, every newly
/// reached node at hop `l` samples at most `fanouts[l]` distinct neighbors.
/// The batch graph holds exactly the sampled (directed) edges; local nodes
/// are ordered by discovery with the seeds first.
pub fn neighbor_sample(d: &Dataset, seed_nodes: &[usize], fanouts: &[usize], seed: u64) -> Result<Batch> {
    if seed_nodes.is_empty() {
        return Err(Error::InvalidArgument("neighbor sampling needs seed nodes".into()));
    }
    let g = d.graph();
    let mut local: HashMap<usize, usize> = HashMap::with_capacity(seed_nodes.len() * 4);
    let mut global_ids = Vec::with_capacity(seed_nodes.len());
    let mut depth = Vec::with_capacity(seed_nodes.len());
    for &s in seed_nodes {
        if s >= d.num_nodes() {
            return Err(Error::NodeOutOfRange {
                id: s,
                num_nodes: d.num_nodes(),
            });
        }
        if !d.is_train(s) {
            return Err(Error::InvalidArgument(format!("seed node {s} is not a training node")));
        }
        if local.insert(s, global_ids.len()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate seed node {s}")));
        }
        global_ids.push(s);
        depth.push(0);
    }

    let mut rng = stream(seed, &[tag::NEIGHBOR]);
    let mut edges = Vec::new();
    let mut frontier: Vec<usize> = (0..seed_nodes.len()).collect();
    for (hop, &fanout) in fanouts.iter().enumerate() {
        let mut next = Vec::new();
        for &lu in &frontier {
            let nbrs = g.neighbors(global_ids[lu]);
            let picked: Vec<usize> = if nbrs.len() <= fanout {
                nbrs.to_vec()
            } else {
                nbrs.choose_multiple(&mut rng, fanout).copied().collect()
            };
            for v in picked {
                let lv = *local.entry(v).or_insert_with(|| {
                    global_ids.push(v);
                    depth.push(hop + 1);
                    next.push(global_ids.len() - 1);
                    global_ids.len() - 1
                });
                edges.push((lu, lv));
            }
        }
        frontier = next;
    }
    let subgraph = build_csr(&edges, global_ids.len(), false)?;
    Ok(Batch {
        subgraph,
        train_local: (0..seed_nodes.len()).collect(),
        global_ids,
        depth: Some(depth),
    })
}

/// Uniformly random partition of all nodes into `num_batches` batches of
/// near-equal size, each an induced sub-graph.
pub fn random_node_batches(d: &Dataset, num_batches: usize, seed: u64) -> Result<Vec<Batch>> {
    if num_batches == 0 || num_batches > d.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "num_batches = {num_batches} must lie in [1, {}]",
            d.num_nodes()
        )));
    }
    let mut order: Vec<usize> = (0..d.num_nodes()).collect();
    order.shuffle(&mut stream(seed, &[tag::RANDOM_NODES]));
    let (base, extra) = (d.num_nodes() / num_batches, d.num_nodes() % num_batches);
    let mut start = 0;
    (0..num_batches)
        .map(|b| {
            let len = base + usize::from(b < extra);
            let mut nodes = order[start..start + len].to_vec();
            start += len;
            nodes.sort_unstable();
            Batch::induced(d, &nodes)
        })
        .collect()
}

/// Sampler selection with per-sampler batch-size semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerConfig {
    /// Whole graph each epoch.
    Full,
    /// Clustered parts; batch size counts parts.
    Cluster { num_parts: usize, parts_per_batch: usize },
    /// Random-walk sub-graphs; batch size counts root training nodes.
    RandomWalk {
        num_roots: usize,
        walk_length: usize,
        /// 0 means `⌈|train| / num_roots⌉`.
        batches_per_epoch: usize,
    },
    /// Layered neighbor sampling; batch size counts seed training nodes.
    Neighbor { batch_size: usize, fanouts: Vec<usize> },
    /// Uniform random node batches; batch size is the number of batches.
    RandomNodes { num_batches: usize },
}

/// Stateful wrapper that owns the cluster partition and produces one
/// epoch of batches at a time.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    partition: Option<Partition>,
    seed: u64,
}

impl Sampler {
    pub fn new(d: &Dataset, config: SamplerConfig, seed: u64) -> Result<Self> {
        let partition = match &config {
            SamplerConfig::Cluster { num_parts, .. } => Some(partition_clusters(d.graph(), *num_parts, seed)?),
            _ => None,
        };
        Ok(Self {
            config,
            partition,
            seed,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn epoch(&self, d: &Dataset, epoch: usize) -> Result<Vec<Batch>> {
        let key = |b: usize| crate::rng::derive_key(self.seed, &[epoch as u64, b as u64]);
        match &self.config {
            SamplerConfig::Full => Ok(vec![Batch::full(d)]),
            SamplerConfig::Cluster { parts_per_batch, .. } => {
                cluster_batches(d, self.partition.as_ref().expect("built in new"), *parts_per_batch, key(0))
            }
            SamplerConfig::RandomWalk {
                num_roots,
                walk_length,
                batches_per_epoch,
            } => {
                let count = if *batches_per_epoch == 0 {
                    d.train_nodes().len().div_ceil((*num_roots).max(1))
                } else {
                    *batches_per_epoch
                };
                (0..count)
                    .map(|b| random_walk_sample(d, *num_roots, *walk_length, key(b)))
                    .collect()
            }
            SamplerConfig::Neighbor { batch_size, fanouts } => {
                if *batch_size == 0 {
                    return Err(Error::InvalidArgument("batch_size must be positive".into()));
                }
                let mut seeds = d.train_nodes().to_vec();
                seeds.shuffle(&mut stream(key(0), &[tag::NEIGHBOR]));
                seeds
                    .chunks(*batch_size)
                    .enumerate()
                    .map(|(b, chunk)| neighbor_sample(d, chunk, fanouts, key(b + 1)))
                    .collect()
            }
            SamplerConfig::RandomNodes { num_batches } => random_node_batches(d, *num_batches, key(0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_sbm, SbmParams};
    use std::collections::{BTreeSet, VecDeque};

    fn sbm(seed: u64) -> Dataset {
        generate_sbm(&SbmParams {
            blocks: 4,
            nodes_per_block: 25,
            p_in: 0.2,
            p_out: 0.01,
            train_fraction: 0.4,
            val_fraction: 0.1,
            seed,
            ..SbmParams::default()
        })
        .unwrap()
    }

    fn components(g: &CsrGraph) -> Vec<usize> {
        let mut comp = vec![usize::MAX; g.num_nodes()];
        let mut next = 0;
        for s in 0..g.num_nodes() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in g.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        q.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Hop distance from `roots` by BFS, `usize::MAX` when unreachable.
    fn bfs(g: &CsrGraph, roots: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; g.num_nodes()];
        let mut q = VecDeque::new();
        for &r in roots {
            dist[r] = 0;
            q.push_back(r);
        }
        while let Some(u) = q.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }

    #[test]
    fn partition_extremes() {
        let d = sbm(1);
        let one = partition_clusters(d.graph(), 1, 0).unwrap();
        assert!(one.part_of().iter().all(|&p| p == 0));
        let n = d.num_nodes();
        let single = partition_clusters(d.graph(), n, 0).unwrap();
        let sizes: Vec<usize> = single.members().iter().map(Vec::len).collect();
        assert!(sizes.iter().all(|&s| s == 1));
        assert!(partition_clusters(d.graph(), 0, 0).is_err());
        assert!(partition_clusters(d.graph(), n + 1, 0).is_err());
    }

    #[test]
    fn partition_is_balanced_and_deterministic() {
        let d = sbm(2);
        for parts in [3, 7, 16, 33] {
            let p = partition_clusters(d.graph(), parts, 9).unwrap();
            let cap = d.num_nodes().div_ceil(parts);
            for m in p.members() {
                assert!(m.len() + 1 >= cap && m.len() <= cap, "{} vs cap {cap}", m.len());
            }
            assert_eq!(p, partition_clusters(d.graph(), parts, 9).unwrap());
        }
    }

    #[test]
    fn partition_recovers_components() {
        let d = generate_sbm(&SbmParams {
            blocks: 4,
            nodes_per_block: 20,
            p_in: 0.5,
            p_out: 0.0,
            seed: 4,
            ..SbmParams::default()
        })
        .unwrap();
        let comp = components(d.graph());
        assert_eq!(comp.iter().collect::<BTreeSet<_>>().len(), 4, "blocks must be connected");
        let p = partition_clusters(d.graph(), 4, 17).unwrap();
        let mut mapping = HashMap::new();
        for v in 0..d.num_nodes() {
            let prev = mapping.insert(p.part_of()[v], comp[v]);
            assert!(prev.is_none() || prev == Some(comp[v]));
        }
        assert_eq!(mapping.values().collect::<BTreeSet<_>>().len(), 4);
    }

    #[test]
    fn one_batch_of_all_parts_is_full_graph() {
        let d = sbm(3);
        let p = partition_clusters(d.graph(), 6, 1).unwrap();
        let batches = cluster_batches(&d, &p, 6, 5).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0], Batch::full(&d));
    }

    #[test]
    fn cluster_epoch_covers_train_once() {
        let d = sbm(4);
        let p = partition_clusters(d.graph(), 10, 1).unwrap();
        for ppb in [1, 3, 4] {
            let batches = cluster_batches(&d, &p, ppb, 6).unwrap();
            assert_eq!(batches.len(), 10usize.div_ceil(ppb));
            let mut seen: Vec<usize> = batches.iter().flat_map(|b| b.train_global()).collect();
            seen.sort_unstable();
            assert_eq!(seen, d.train_nodes());
            assert_eq!(batches, cluster_batches(&d, &p, ppb, 6).unwrap());
        }
        assert!(cluster_batches(&d, &p, 0, 6).is_err());
        assert!(cluster_batches(&d, &p, 11, 6).is_err());
    }

    #[test]
    fn zero_length_walks_are_roots() {
        let d = sbm(5);
        let b = random_walk_sample(&d, 7, 0, 3).unwrap();
        let mut rng = stream(3, &[tag::RANDOM_WALK]);
        let roots: BTreeSet<usize> = (0..7).map(|_| *d.train_nodes().choose(&mut rng).unwrap()).collect();
        assert_eq!(b.global_ids().iter().copied().collect::<BTreeSet<_>>(), roots);
        assert_eq!(b.train_local().len(), b.num_nodes());
    }

    #[test]
    fn isolated_root_stays_put() {
        let g = build_csr(&[(1, 2)], 3, true).unwrap();
        let d = Dataset::new(
            g,
            crate::graph::DenseMatrix::zeros(3, 1),
            vec![Some(0), Some(0), Some(0)],
            1,
            vec![crate::data::Split::Train, crate::data::Split::Test, crate::data::Split::Test],
        )
        .unwrap();
        let b = random_walk_sample(&d, 3, 5, 1).unwrap();
        assert_eq!(b.global_ids(), &[0]);
    }

    #[test]
    fn walk_nodes_within_reach() {
        let d = sbm(6);
        for seed in 0..10 {
            let len = 3;
            let b = random_walk_sample(&d, 5, len, seed).unwrap();
            // roots are training nodes in the batch; every node must be within
            // `len` hops of some visited training node
            let roots: Vec<usize> = b.train_global();
            let dist = bfs(d.graph(), &roots);
            assert!(b.global_ids().iter().all(|&v| dist[v] <= len));
        }
        let empty = Dataset::new(
            build_csr(&[], 2, true).unwrap(),
            crate::graph::DenseMatrix::zeros(2, 1),
            vec![None, None],
            1,
            vec![crate::data::Split::Unused; 2],
        )
        .unwrap();
        assert!(random_walk_sample(&empty, 1, 1, 0).is_err());
    }

    #[test]
    fn large_fanout_reaches_full_neighborhood() {
        let d = sbm(7);
        let seeds: Vec<usize> = d.train_nodes()[..3].to_vec();
        let maxd = d.graph().max_degree();
        let b = neighbor_sample(&d, &seeds, &[maxd, maxd], 1).unwrap();
        let dist = bfs(d.graph(), &seeds);
        let oracle: BTreeSet<usize> = (0..d.num_nodes()).filter(|&v| dist[v] <= 2).collect();
        assert_eq!(b.global_ids().iter().copied().collect::<BTreeSet<_>>(), oracle);
        let depth = b.depth().unwrap();
        for (k, &g) in b.global_ids().iter().enumerate() {
            assert_eq!(depth[k], dist[g]);
        }
        assert_eq!(b.train_local(), &[0, 1, 2]);
    }

    #[test]
    fn zero_fanout_is_seeds() {
        let d = sbm(8);
        let seeds: Vec<usize> = d.train_nodes()[..4].to_vec();
        let b = neighbor_sample(&d, &seeds, &[0, 0, 0], 1).unwrap();
        assert_eq!(b.global_ids(), seeds.as_slice());
        assert_eq!(b.subgraph().nnz(), 0);
        assert!(neighbor_sample(&d, &[], &[1], 1).is_err());
    }

    #[test]
    fn sampled_edges_exist_and_respect_fanout() {
        let d = sbm(9);
        for seed in 0..10 {
            let seeds: Vec<usize> = d.train_nodes()[..5].to_vec();
            let b = neighbor_sample(&d, &seeds, &[3, 2], seed).unwrap();
            let ids = b.global_ids();
            for (u, v) in b.subgraph().edges() {
                assert!(d.graph().has_edge(ids[u], ids[v]));
            }
            let depth = b.depth().unwrap();
            for u in 0..b.num_nodes() {
                let limit = match depth[u] {
                    0 => 3,
                    1 => 2,
                    _ => 0,
                };
                assert!(b.subgraph().degree(u) <= limit);
            }
        }
    }

    #[test]
    fn samplers_are_reproducible() {
        let d = sbm(10);
        for cfg in [
            SamplerConfig::Cluster { num_parts: 8, parts_per_batch: 2 },
            SamplerConfig::RandomWalk { num_roots: 5, walk_length: 2, batches_per_epoch: 0 },
            SamplerConfig::Neighbor { batch_size: 10, fanouts: vec![4, 4] },
            SamplerConfig::RandomNodes { num_batches: 4 },
            SamplerConfig::Full,
        ] {
            let s = Sampler::new(&d, cfg.clone(), 42).unwrap();
            assert_eq!(s.epoch(&d, 3).unwrap(), Sampler::new(&d, cfg, 42).unwrap().epoch(&d, 3).unwrap());
        }
    }

    #[test]
    fn random_node_batches_partition_nodes() {
        let d = sbm(11);
        let batches = random_node_batches(&d, 7, 1).unwrap();
        let mut all: Vec<usize> = batches.iter().flat_map(|b| b.global_ids().to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..d.num_nodes()).collect::<Vec<_>>());
    }
}
