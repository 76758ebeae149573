//! Graph convolutional network: symmetric-normalized neighbor aggregation with
//! self-loops, ReLU hidden layers and a sigmoid scalar head; fan-out sampled
//! mini-batch SGD training; finite-difference gradient checking; a versioned
//! binary model format.

mod io;
mod sample;
mod train;

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LayoutGraph, FEATURE_DIM};
use crate::rng::rng;

pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use sample::{sample_neighbors, SampledSubgraph};
pub use train::{grad_check, loss, train, Gradients, GRAD_CHECK_FLOOR};

pub const DEFAULT_DEPTH: usize = 7;
pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    /// Linear hidden layers; used to check gradients without kinks.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// in-dim × out-dim.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl GcnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(depth: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut m = GcnModel::zeros(depth, hidden)?;
        let mut r = rng(seed);
        for l in &mut m.layers {
            let (fi, fo) = l.weight.dim();
            let a = (6.0 / (fi + fo) as f64).sqrt();
            l.weight.mapv_inplace(|_| r.random_range(-a..=a));
        }
        Ok(m)
    }

    pub fn zeros(depth: usize, hidden: usize) -> Result<Self> {
        if depth == 0 || hidden == 0 {
            return Err(Error::InvalidArgument("depth and hidden width must be >= 1".into()));
        }
        let dims = Self::dims_for(depth, hidden);
        let layers = dims
            .windows(2)
            .map(|w| Layer { weight: Array2::zeros((w[0], w[1])), bias: Array1::zeros(w[1]) })
            .collect();
        Ok(GcnModel { layers, activation: Activation::Relu })
    }

    fn dims_for(depth: usize, hidden: usize) -> Vec<usize> {
        let mut dims = vec![FEATURE_DIM];
        dims.extend(std::iter::repeat_n(hidden, depth - 1));
        dims.push(1);
        dims
    }

    pub fn with_activation(mut self, a: Activation) -> Self {
        self.activation = a;
        self
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// in-dim of layer 0 followed by every layer's out-dim.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].weight.nrows()];
        d.extend(self.layers.iter().map(|l| l.weight.ncols()));
        d
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.dims();
        if d[0] != FEATURE_DIM || *d.last().unwrap() != 1 {
            return Err(Error::DimensionMismatch(format!("model dims {d:?}: need {FEATURE_DIM} in, 1 out")));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.weight.ncols() || (i > 0 && l.weight.nrows() != self.layers[i - 1].weight.ncols()) {
                return Err(Error::DimensionMismatch(format!("layer {i} shape")));
            }
        }
        Ok(())
    }
}

/// Sparse aggregation operator mapping source-node rows to destination-node
/// rows. Destination i is source i (destinations are a prefix of sources).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Block {
    pub n_src: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Block {
    pub fn n_dst(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Builds a block from per-destination neighbor lists (source-local
    /// indices), weighting with the full-graph degrees `deg`.
    pub fn new(n_src: usize, nbrs: &[Vec<usize>], deg: &[usize]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, list) in nbrs.iter().enumerate() {
            let di = deg[i] as f64 + 1.0;
            cols.push(i);
            vals.push(1.0 / di);
            for &j in list {
                cols.push(j);
                vals.push(1.0 / (di * (deg[j] as f64 + 1.0)).sqrt());
            }
            row_ptr.push(cols.len());
        }
        Block { n_src, row_ptr, cols, vals }
    }

    /// Whole-graph operator.
    pub fn full(graph: &LayoutGraph) -> Self {
        let nbrs: Vec<Vec<usize>> = (0..graph.num_nodes).map(|v| graph.neighbors(v).to_vec()).collect();
        let deg: Vec<usize> = (0..graph.num_nodes).map(|v| graph.degree(v)).collect();
        Block::new(graph.num_nodes, &nbrs, &deg)
    }

    /// Operator whose destinations are the given rows of this one.
    pub fn select_rows(&self, rows: &[usize]) -> Block {
        let mut b = Block { n_src: self.n_src, row_ptr: vec![0], cols: Vec::new(), vals: Vec::new() };
        for &i in rows {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            b.cols.extend_from_slice(&self.cols[r.clone()]);
            b.vals.extend_from_slice(&self.vals[r]);
            b.row_ptr.push(b.cols.len());
        }
        b
    }

    pub fn apply(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_dst(), m.ncols()));
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row.scaled_add(self.vals[k], &m.row(self.cols[k]));
            }
        }
        out
    }

    pub fn apply_t(&self, d: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_src, d.ncols()));
        for i in 0..self.n_dst() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.row_mut(self.cols[k]).scaled_add(self.vals[k], &d.row(i));
            }
        }
        out
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Activations kept for the backward pass: `inputs[l]` feeds layer l,
/// `pre[l]` is layer l's pre-activation.
pub(crate) struct Trace {
    pub inputs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
}

/// Runs the network over `blocks` (input side first) and returns the head
/// scores for the final block's destinations.
pub(crate) fn propagate(model: &GcnModel, blocks: &[&Block], x: Array2<f64>, keep: bool) -> (Vec<f64>, Option<Trace>) {
    debug_assert_eq!(blocks.len(), model.depth());
    let mut trace = keep.then(|| Trace { inputs: Vec::new(), pre: Vec::new() });
    let mut h = x;
    let last = model.depth() - 1;
    for (l, (layer, block)) in model.layers.iter().zip(blocks).enumerate() {
        let m = h.dot(&layer.weight);
        let mut z = block.apply(&m);
        z += &layer.bias;
        let next = if l == last {
            z.mapv(sigmoid)
        } else {
            match model.activation {
                Activation::Relu => z.mapv(|v| v.max(0.0)),
                Activation::Identity => z.clone(),
            }
        };
        if let Some(t) = trace.as_mut() {
            t.inputs.push(h);
            t.pre.push(z);
        }
        h = next;
    }
    (h.column(0).to_vec(), trace)
}

/// Full-neighborhood scores for every node.
pub fn forward_all(model: &GcnModel, graph: &LayoutGraph) -> Result<Vec<f64>> {
    model.check_shape()?;
    if graph.features.ncols() != FEATURE_DIM {
        return Err(Error::DimensionMismatch(format!("graph has {} feature columns", graph.features.ncols())));
    }
    let b = Block::full(graph);
    let blocks: Vec<&Block> = vec![&b; model.depth()];
    Ok(propagate(model, &blocks, graph.features.clone(), false).0)
}

/// Full-neighborhood scores for the given nodes.
pub fn forward(model: &GcnModel, graph: &LayoutGraph, nodes: &[usize]) -> Result<Vec<f64>> {
    if let Some(&v) = nodes.iter().find(|&&v| v >= graph.num_nodes) {
        return Err(Error::InvalidNode(v));
    }
    let all = forward_all(model, graph)?;
    Ok(nodes.iter().map(|&v| all[v]).collect())
}

/// Scores of the seeds of a sampled subgraph.
pub fn forward_sampled(model: &GcnModel, sub: &SampledSubgraph) -> Result<Vec<f64>> {
    model.check_shape()?;
    if sub.blocks.len() != model.depth() {
        return Err(Error::DimensionMismatch(format!(
            "subgraph has {} hops, model has {} layers",
            sub.blocks.len(),
            model.depth()
        )));
    }
    let blocks: Vec<&Block> = sub.blocks.iter().rev().collect();
    Ok(propagate(model, &blocks, sub.features.clone(), false).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Per-hop neighbor caps, hop 1 first; one entry per layer.
    pub fanouts: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            weight_decay: 0.001,
            momentum: 0.9,
            epochs: 30,
            batch_size: 1280,
            fanouts: vec![15, 20, 35, 50, 100, 200, 500],
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Fanouts for a model of a different depth: truncate, or repeat the last cap.
    pub fn fanouts_for_depth(&self, depth: usize) -> Vec<usize> {
        let last = *self.fanouts.last().unwrap_or(&500);
        (0..depth).map(|i| self.fanouts.get(i).copied().unwrap_or(last)).collect()
    }

    pub fn validate(&self, depth: usize) -> Result<()> {
        if self.fanouts.len() != depth {
            return Err(Error::InvalidArgument(format!(
                "{} fanouts for a {depth}-layer model",
                self.fanouts.len()
            )));
        }
        if self.fanouts.contains(&0) || self.batch_size == 0 {
            return Err(Error::InvalidArgument("fanouts and batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.weight_decay >= 0.0 && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::InvalidArgument("need lr >= 0, weight decay >= 0, momentum in [0,1)".into()));
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use proptest::prelude::*;

    use super::testutil::random_graph;
    use super::*;
    use crate::netlist::CellKind;

    /// Dense matrix-form propagation: H ← act(Â H W + b).
    pub(crate) fn dense_oracle(model: &GcnModel, g: &LayoutGraph) -> Vec<f64> {
        let n = g.num_nodes;
        let mut adj = Array2::<f64>::eye(n);
        for &(a, b) in &g.edges {
            adj[[a, b]] = 1.0;
            adj[[b, a]] = 1.0;
        }
        let deg: Vec<f64> = adj.rows().into_iter().map(|r| r.sum()).collect();
        let norm = Array2::from_shape_fn((n, n), |(i, j)| adj[[i, j]] / (deg[i] * deg[j]).sqrt());
        let mut h = g.features.clone();
        for (l, layer) in model.layers.iter().enumerate() {
            let z = norm.dot(&h).dot(&layer.weight) + &layer.bias;
            h = if l + 1 == model.depth() {
                z.mapv(sigmoid)
            } else {
                match model.activation {
                    Activation::Relu => z.mapv(|v| v.max(0.0)),
                    Activation::Identity => z,
                }
            };
        }
        h.column(0).to_vec()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn zero_model_isolated_node_is_half() {
        let g = random_graph(1, 0, 0);
        let m = GcnModel::zeros(DEFAULT_DEPTH, DEFAULT_HIDDEN).unwrap();
        assert_eq!(forward(&m, &g, &[0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn symmetric_pair_identical_scores() {
        let mut g = random_graph(2, 0, 0);
        let row = g.features.row(0).to_owned();
        g.features.row_mut(1).assign(&row);
        let g = LayoutGraph::from_parts(
            g.features.clone(),
            vec![(0, 1)],
            g.origin.clone(),
            vec![CellKind::Standard; 2],
            vec![true; 2],
            g.names.clone(),
        )
        .unwrap();
        let m = GcnModel::new(DEFAULT_DEPTH, 16, 3).unwrap();
        let s = forward_all(&m, &g).unwrap();
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn matches_dense_oracle() {
        for seed in 0..10 {
            let n = 5 + (seed as usize * 7) % 45;
            let g = random_graph(n, 2 * n, seed);
            let m = GcnModel::new(DEFAULT_DEPTH, 32, seed + 100).unwrap();
            let got = forward_all(&m, &g).unwrap();
            let want = dense_oracle(&m, &g);
            for (a, b) in got.iter().zip(&want) {
                assert!(rel(*a, *b) < 1e-6, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = random_graph(4, 4, 0);
        let mut m = GcnModel::zeros(3, 4).unwrap();
        m.layers[0].weight = Array2::zeros((7, 4));
        assert!(matches!(forward_all(&m, &g), Err(Error::DimensionMismatch(_))));
        assert!(matches!(forward(&GcnModel::zeros(3, 4).unwrap(), &g, &[9]), Err(Error::InvalidNode(9))));
    }

    #[test]
    fn fanouts_validated() {
        let c = TrainConfig::default();
        assert!(c.validate(7).is_ok());
        assert!(c.validate(5).is_err());
        assert_eq!(c.fanouts_for_depth(5), vec![15, 20, 35, 50, 100]);
        assert_eq!(c.fanouts_for_depth(9)[7..], [500, 500]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn relabeling_equivariance(n in 2usize..25, seed in 0u64..1000) {
            let g = random_graph(n, 2 * n, seed);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.rotate_left((seed as usize) % n);
            perm.reverse();
            // new id of old node v is perm[v]
            let mut feats = Array2::zeros(g.features.dim());
            for v in 0..n {
                feats.row_mut(perm[v]).assign(&g.features.row(v));
            }
            let edges = g.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            let h = LayoutGraph::from_parts(
                feats, edges, (0..n).map(|v| vec![v]).collect(),
                vec![CellKind::Standard; n], vec![true; n], (0..n).map(|v| format!("n{v}")).collect(),
            ).unwrap();
            let m = GcnModel::new(4, 8, seed).unwrap();
            let a = forward_all(&m, &g).unwrap();
            let b = forward_all(&m, &h).unwrap();
            for v in 0..n {
                prop_assert!((a[v] - b[perm[v]]).abs() < 1e-12);
            }
        }
    }
}
