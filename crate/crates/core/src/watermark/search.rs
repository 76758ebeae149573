//! Model-guided choice of the watermark center.

use crate::error::{Error, Result};
use crate::gnn::{forward_all, GcnModel};
use crate::graph::LayoutGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Winning graph node.
    pub center: usize,
    /// Raw model score per node.
    pub scores: Vec<f64>,
    /// Score plus gamma times the hop-averaged neighborhood score, per node.
    pub combined: Vec<f64>,
}

/// For every node, the mean over k = 1..=hops of the mean score of the nodes
/// exactly k hops away; an empty shell contributes 0.
pub fn post_aggregate(graph: &LayoutGraph, scores: &[f64], hops: usize) -> Result<Vec<f64>> {
    if scores.len() != graph.num_nodes {
        return Err(Error::DimensionMismatch(format!("{} scores for {} nodes", scores.len(), graph.num_nodes)));
    }
    if hops == 0 {
        return Ok(vec![0.0; graph.num_nodes]);
    }
    (0..graph.num_nodes)
        .map(|v| {
            let shells = graph.hop_shells(v, hops)?;
            let sum: f64 = shells
                .iter()
                .map(|s| if s.is_empty() { 0.0 } else { s.iter().map(|&u| scores[u]).sum::<f64>() / s.len() as f64 })
                .sum();
            Ok(sum / hops as f64)
        })
        .collect()
}

/// Scores every node and returns the eligible node minimizing
/// `score + gamma * aggregate`, lowest id first on ties.
pub fn search(model: &GcnModel, graph: &LayoutGraph, gamma: f64, agg_hops: usize) -> Result<SearchResult> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("gamma must be >= 0".into()));
    }
    let scores = forward_all(model, graph)?;
    search_with_scores(graph, scores, gamma, agg_hops)
}

pub(crate) fn search_with_scores(graph: &LayoutGraph, scores: Vec<f64>, gamma: f64, agg_hops: usize) -> Result<SearchResult> {
    let combined: Vec<f64> = if gamma > 0.0 && agg_hops > 0 {
        let agg = post_aggregate(graph, &scores, agg_hops)?;
        scores.iter().zip(&agg).map(|(s, a)| s + gamma * a).collect()
    } else {
        scores.clone()
    };
    let mut best: Option<usize> = None;
    for v in (0..graph.num_nodes).filter(|&v| graph.is_eligible(v)) {
        if best.is_none_or(|b| combined[v] < combined[b]) {
            best = Some(v);
        }
    }
    let center = best.ok_or_else(|| Error::Empty("no eligible nodes to search".into()))?;
    Ok(SearchResult { center, scores, combined })
}
