//! Layer-wise fan-out neighbor sampling.

use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::index;

use super::Block;
use crate::error::{Error, Result};
use crate::graph::LayoutGraph;
use crate::rng::rng;

/// `layers[0]` are the seeds; `layers[l + 1]` extends `layers[l]` with the
/// neighbors sampled for it at hop l + 1. `blocks[l]` aggregates
/// `layers[l + 1]` into `layers[l]`; `features` holds rows for the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSubgraph {
    pub layers: Vec<Vec<usize>>,
    /// Sampled (dst, src) graph-node pairs per hop, excluding self-loops.
    pub edges: Vec<Vec<(usize, usize)>>,
    pub features: Array2<f64>,
    pub(crate) blocks: Vec<Block>,
}

pub fn sample_neighbors(graph: &LayoutGraph, seeds: &[usize], fanouts: &[usize], seed: u64) -> Result<SampledSubgraph> {
    if let Some(&v) = seeds.iter().find(|&&v| v >= graph.num_nodes) {
        return Err(Error::InvalidNode(v));
    }
    let mut r = rng(seed);
    let mut layer: Vec<usize> = Vec::with_capacity(seeds.len());
    let mut local: HashMap<usize, usize> = HashMap::new();
    for &s in seeds {
        if !local.contains_key(&s) {
            local.insert(s, layer.len());
            layer.push(s);
        }
    }
    let mut layers = vec![layer.clone()];
    let mut edges = Vec::with_capacity(fanouts.len());
    let mut blocks = Vec::with_capacity(fanouts.len());
    for &cap in fanouts {
        let n_dst = layer.len();
        let mut nbrs: Vec<Vec<usize>> = Vec::with_capacity(n_dst);
        let mut hop_edges = Vec::new();
        for i in 0..n_dst {
            let v = layer[i];
            let all = graph.neighbors(v);
            let picked: Vec<usize> = if all.len() <= cap {
                all.to_vec()
            } else {
                index::sample(&mut r, all.len(), cap).into_iter().map(|k| all[k]).collect()
            };
            let mut list = Vec::with_capacity(picked.len());
            for u in picked {
                let j = *local.entry(u).or_insert_with(|| {
                    layer.push(u);
                    layer.len() - 1
                });
                list.push(j);
                hop_edges.push((v, u));
            }
            nbrs.push(list);
        }
        let deg: Vec<usize> = layer.iter().map(|&v| graph.degree(v)).collect();
        blocks.push(Block::new(layer.len(), &nbrs, &deg));
        edges.push(hop_edges);
        layers.push(layer.clone());
    }
    let last = layers.last().unwrap();
    let features = graph.features.select(ndarray::Axis(0), last);
    Ok(SampledSubgraph { layers, edges, features, blocks })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::random_graph;
    use super::super::{forward, forward_sampled, GcnModel};
    use super::*;

    #[test]
    fn uncapped_keeps_all_neighbors() {
        let g = random_graph(30, 60, 1);
        let v = (0..30).find(|&v| g.degree(v) == 3).unwrap_or(0);
        let s = sample_neighbors(&g, &[v], &[15], 0).unwrap();
        let got: Vec<usize> = s.edges[0].iter().map(|e| e.1).collect();
        assert_eq!(got, g.neighbors(v));
    }

    #[test]
    fn cap_binds() {
        let g = random_graph(60, 400, 2);
        let s = sample_neighbors(&g, &[0, 1, 2], &[2, 2], 5).unwrap();
        for hop in &s.edges {
            let mut per = HashMap::new();
            for &(d, _) in hop {
                *per.entry(d).or_insert(0) += 1;
            }
            assert!(per.values().all(|&c| c <= 2));
        }
        for w in s.layers.windows(2) {
            assert_eq!(&w[1][..w[0].len()], &w[0][..]);
        }
    }

    #[test]
    fn deterministic() {
        let g = random_graph(80, 500, 3);
        let a = sample_neighbors(&g, &[4, 5], &[3, 3, 3], 11).unwrap();
        let b = sample_neighbors(&g, &[4, 5], &[3, 3, 3], 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_fanouts_equal_full_forward() {
        for seed in 0..5 {
            let g = random_graph(40, 90, seed);
            let m = GcnModel::new(5, 16, seed).unwrap();
            let seeds = [0, 7, 13, 39];
            let s = sample_neighbors(&g, &seeds, &[1000; 5], seed).unwrap();
            let a = forward_sampled(&m, &s).unwrap();
            let b = forward(&m, &g, &seeds).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-6 * y.abs());
            }
        }
    }
}
