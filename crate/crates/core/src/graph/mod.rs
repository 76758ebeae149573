//! Layout graph: one node per cell outside fences plus one node per fence,
//! driver-to-load edges from net star expansion, and an 8-wide feature row
//! per node (x, y, width, height, four name-embedding dimensions).

mod embed;
mod sample;

use std::collections::VecDeque;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::netlist::{CellId, CellKind, Netlist, Placement};

pub use embed::{name_embedding, trigram_vector, EMBED_DIM, HASH_DIM, MIN_PCA_NAMES};
pub use sample::{grid_sample, GridSample};

/// Number of feature columns.
pub const FEATURE_DIM: usize = 8;
/// Columns holding the name embedding.
pub const NAME_COLUMNS: std::ops::Range<usize> = 4..8;
/// Columns holding the location.
pub const LOCATION_COLUMNS: std::ops::Range<usize> = 0..2;
/// Columns holding the size.
pub const SIZE_COLUMNS: std::ops::Range<usize> = 2..4;

pub const MACRO_PREFIX: &str = "MACRO#";
pub const FENCE_PREFIX: &str = "FENCE#";

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutGraph {
    pub num_nodes: usize,
    /// Directed driver-to-load edges, sorted and deduplicated.
    pub edges: Vec<(usize, usize)>,
    pub features: Array2<f64>,
    /// Original cells behind each node.
    pub origin: Vec<Vec<CellId>>,
    pub node_of_cell: Vec<usize>,
    pub kinds: Vec<CellKind>,
    pub movable: Vec<bool>,
    /// Names as embedded, including the reserved prefixes.
    pub names: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl LayoutGraph {
    /// Assembles a graph from parts. Edges are deduplicated and self-loops dropped.
    pub fn from_parts(
        features: Array2<f64>,
        edges: Vec<(usize, usize)>,
        origin: Vec<Vec<CellId>>,
        kinds: Vec<CellKind>,
        movable: Vec<bool>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        if origin.len() != n || kinds.len() != n || movable.len() != n || names.len() != n {
            return Err(Error::DimensionMismatch("per-node vectors disagree with feature rows".into()));
        }
        let mut edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= n || *b >= n) {
            return Err(Error::InvalidNode(a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        let num_cells = origin.iter().flatten().map(|&c| c + 1).max().unwrap_or(0);
        let mut node_of_cell = vec![usize::MAX; num_cells];
        for (v, cells) in origin.iter().enumerate() {
            for &c in cells {
                node_of_cell[c] = v;
            }
        }
        Ok(LayoutGraph { num_nodes: n, edges, features, origin, node_of_cell, kinds, movable, names, adj })
    }

    /// Undirected neighbors of `v`, sorted, without `v` itself.
    /// Places the graphs side by side. Node ids of part k are shifted by the
    /// node count of parts 0..k, cell ids by their cell count.
    pub fn disjoint_union(parts: &[&LayoutGraph]) -> Result<Self> {
        let total: usize = parts.iter().map(|g| g.num_nodes).sum();
        let mut features = Array2::zeros((total, FEATURE_DIM));
        let (mut edges, mut origin, mut kinds, mut movable, mut names) = (vec![], vec![], vec![], vec![], vec![]);
        let (mut node_off, mut cell_off) = (0, 0);
        for g in parts {
            if g.features.ncols() != FEATURE_DIM {
                return Err(Error::DimensionMismatch(format!("{} feature columns", g.features.ncols())));
            }
            features.slice_mut(ndarray::s![node_off..node_off + g.num_nodes, ..]).assign(&g.features);
            edges.extend(g.edges.iter().map(|&(a, b)| (a + node_off, b + node_off)));
            origin.extend(g.origin.iter().map(|o| o.iter().map(|c| c + cell_off).collect::<Vec<_>>()));
            kinds.extend_from_slice(&g.kinds);
            movable.extend_from_slice(&g.movable);
            names.extend_from_slice(&g.names);
            node_off += g.num_nodes;
            cell_off += g.node_of_cell.len();
        }
        Self::from_parts(features, edges, origin, kinds, movable, names)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Nodes the search may return: movable standard cells.
    pub fn is_eligible(&self, v: usize) -> bool {
        self.kinds[v] == CellKind::Standard && self.movable[v]
    }

    /// Exactly-k-hop shells around `v` for k = 1..=max_k (index 0 holds hop 1).
    pub fn hop_shells(&self, v: usize, max_k: usize) -> Result<Vec<Vec<usize>>> {
        if v >= self.num_nodes {
            return Err(Error::InvalidNode(v));
        }
        let mut dist = std::collections::HashMap::new();
        dist.insert(v, 0usize);
        let mut shells = vec![Vec::new(); max_k];
        let mut q = VecDeque::from([v]);
        while let Some(u) = q.pop_front() {
            let d = dist[&u];
            if d == max_k {
                continue;
            }
            for &w in &self.adj[u] {
                if !dist.contains_key(&w) {
                    dist.insert(w, d + 1);
                    shells[d].push(w);
                    q.push_back(w);
                }
            }
        }
        for s in &mut shells {
            s.sort_unstable();
        }
        Ok(shells)
    }

    /// Copy with the given feature columns zeroed.
    pub fn with_zeroed_columns(&self, cols: &[usize]) -> LayoutGraph {
        let mut g = self.clone();
        for &c in cols {
            g.features.column_mut(c).fill(0.0);
        }
        g
    }

    /// Writes `edges.csv` (src,dst) and `nodes.csv`
    /// (node,name,kind,x,y,width,height,e1,e2,e3,e4) for inspection.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_err = |p: &Path, e: csv::Error| Error::io(p, std::io::Error::other(e));

        let p = dir.join("edges.csv");
        let mut w = csv::Writer::from_path(&p).map_err(|e| csv_err(&p, e))?;
        w.write_record(["src", "dst"]).map_err(|e| csv_err(&p, e))?;
        for &(a, b) in &self.edges {
            w.write_record([a.to_string(), b.to_string()]).map_err(|e| csv_err(&p, e))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;

        let p = dir.join("nodes.csv");
        let mut w = csv::Writer::from_path(&p).map_err(|e| csv_err(&p, e))?;
        w.write_record(["node", "name", "kind", "x", "y", "width", "height", "e1", "e2", "e3", "e4"])
            .map_err(|e| csv_err(&p, e))?;
        for v in 0..self.num_nodes {
            let mut rec = vec![v.to_string(), self.names[v].clone(), format!("{:?}", self.kinds[v])];
            rec.extend(self.features.row(v).iter().map(|x| x.to_string()));
            w.write_record(&rec).map_err(|e| csv_err(&p, e))?;
        }
        let mut inner = w.into_inner().map_err(|e| Error::io(&p, e.into_error()))?;
        inner.flush().map_err(|e| Error::io(&p, e))
    }
}

/// Nodes at exactly `k` undirected hops from `node`, sorted.
pub fn neighborhood(graph: &LayoutGraph, node: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("hop count must be >= 1".into()));
    }
    Ok(graph.hop_shells(node, k)?.pop().unwrap_or_default())
}

/// Graph name of a cell: macros get a reserved prefix.
fn node_name(netlist: &Netlist, c: CellId) -> String {
    let cell = &netlist.cells[c];
    match cell.kind {
        CellKind::Macro => format!("{MACRO_PREFIX}{}", cell.name),
        _ => cell.name.clone(),
    }
}

pub fn build_graph(netlist: &Netlist, placement: &Placement) -> Result<LayoutGraph> {
    if placement.len() != netlist.cells.len() {
        return Err(Error::DimensionMismatch(format!(
            "placement has {} positions for {} cells",
            placement.len(),
            netlist.cells.len()
        )));
    }
    if !placement.is_finite() {
        return Err(Error::IncompletePlacement("non-finite position".into()));
    }

    let mut origin: Vec<Vec<CellId>> = Vec::new();
    let mut kinds = Vec::new();
    let mut movable = Vec::new();
    let mut names = Vec::new();
    let mut node_of_cell = vec![usize::MAX; netlist.cells.len()];
    for (c, cell) in netlist.cells.iter().enumerate() {
        if netlist.fence_of[c].is_none() {
            node_of_cell[c] = origin.len();
            origin.push(vec![c]);
            kinds.push(cell.kind);
            movable.push(cell.movable);
            names.push(node_name(netlist, c));
        }
    }
    let first_fence = origin.len();
    for f in 0..netlist.fences.len() {
        let members = netlist.fence_members(f);
        for &c in &members {
            node_of_cell[c] = first_fence + f;
        }
        origin.push(members);
        kinds.push(CellKind::FencePseudo);
        movable.push(false);
        names.push(format!("{FENCE_PREFIX}{f}"));
    }
    let n = origin.len();

    let mut edges = Vec::new();
    for net in &netlist.nets {
        let d = net.driver_index();
        let src = node_of_cell[net.pins[d].cell];
        for (i, p) in net.pins.iter().enumerate() {
            let dst = node_of_cell[p.cell];
            if i != d && dst != src {
                edges.push((src, dst));
            }
        }
    }

    let core = netlist.core();
    let (cw, ch) = (core.width().max(1e-12), core.height().max(1e-12));
    let max_w = netlist.cells.iter().map(|c| c.width).max().unwrap_or(1).max(1) as f64;
    let max_h = netlist.cells.iter().map(|c| c.height).max().unwrap_or(1).max(1) as f64;
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let emb = name_embedding(&name_refs)?;

    let mut features = Array2::<f64>::zeros((n, FEATURE_DIM));
    for v in 0..n {
        let (x, y, w, h) = if kinds[v] == CellKind::FencePseudo {
            let b = netlist.fences[v - first_fence].bbox();
            let (cx, cy) = b.center();
            (cx, cy, b.width(), b.height())
        } else {
            let c = origin[v][0];
            let (x, y) = placement.get(c);
            let cell = &netlist.cells[c];
            (x, y, cell.width as f64, cell.height as f64)
        };
        let mut row = features.row_mut(v);
        row[0] = (x - core.x0) / cw;
        row[1] = (y - core.y0) / ch;
        row[2] = w / max_w;
        row[3] = h / max_h;
        for k in 0..EMBED_DIM {
            row[4 + k] = emb[v][k];
        }
    }

    let mut g = LayoutGraph::from_parts(features, edges, origin, kinds, movable, names)?;
    g.node_of_cell = node_of_cell;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;
    use crate::geom::Rect;
    use crate::netlist::fixtures::*;
    use crate::netlist::{synth_design, Region, RegionKind, SynthParams};
    use crate::rng::rng;

    fn plain_graph(n: usize, edges: Vec<(usize, usize)>) -> LayoutGraph {
        LayoutGraph::from_parts(
            Array2::zeros((n, FEATURE_DIM)),
            edges,
            (0..n).map(|v| vec![v]).collect(),
            vec![CellKind::Standard; n],
            vec![true; n],
            (0..n).map(|v| format!("n{v}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn disjoint_union_shifts_ids() {
        let a = plain_graph(3, vec![(0, 1), (1, 2)]);
        let b = plain_graph(2, vec![(1, 0)]);
        let u = LayoutGraph::disjoint_union(&[&a, &b]).unwrap();
        assert_eq!(u.num_nodes, 5);
        assert_eq!(u.edges, vec![(0, 1), (1, 2), (4, 3)]);
        assert_eq!(u.node_of_cell, vec![0, 1, 2, 3, 4]);
        assert!(u.hop_shells(0, 4).unwrap().iter().flatten().all(|&v| v < 3));
    }

    #[test]
    fn star_expansion_from_driver() {
        let cells = vec![std_cell(0, "a", 1), std_cell(1, "b", 1), std_cell(2, "c", 1)];
        let nl = Netlist::new(cells, vec![net(0, &[0, 1, 2])], rows(2, 10, 1.0), vec![], vec![None; 3]).unwrap();
        let pl = Placement::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let g = build_graph(&nl, &pl).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2)]);
        assert_eq!(g.features.ncols(), 8);
    }

    #[test]
    fn undriven_net_uses_first_pin() {
        let cells = vec![std_cell(0, "a", 1), std_cell(1, "b", 1), std_cell(2, "c", 1)];
        let mut n0 = net(0, &[2, 0, 1]);
        n0.driver = None;
        let nl = Netlist::new(cells, vec![n0], rows(2, 10, 1.0), vec![], vec![None; 3]).unwrap();
        let pl = Placement::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let g = build_graph(&nl, &pl).unwrap();
        assert_eq!(g.edges, vec![(2, 0), (2, 1)]);
    }

    #[test]
    fn fence_collapses_and_dedups() {
        let cells = vec![std_cell(0, "a", 1), std_cell(1, "b", 1), std_cell(2, "c", 1)];
        let nets = vec![net(0, &[0, 1]), net(1, &[0, 2]), net(2, &[1, 2])];
        let fence = Region::new(0, vec![Rect::new(4.0, 0.0, 8.0, 2.0)], RegionKind::Fence).unwrap();
        let nl = Netlist::new(cells, nets, rows(2, 10, 1.0), vec![fence], vec![None, Some(0), Some(0)]).unwrap();
        let pl = Placement::new(vec![(0.0, 0.0), (4.0, 0.0), (5.0, 0.0)]);
        let g = build_graph(&nl, &pl).unwrap();
        assert_eq!(g.num_nodes, 2);
        assert_eq!(g.edges, vec![(0, 1)]);
        assert_eq!(g.origin[1], vec![1, 2]);
        assert_eq!(g.kinds[1], CellKind::FencePseudo);
        assert_eq!(g.names[1], "FENCE#0");
        // Fence location and size features come from its rect.
        assert!((g.features[[1, 0]] - 0.6).abs() < 1e-12);
        assert!((g.features[[1, 2]] - 4.0).abs() < 1e-12);
        assert_eq!(g.node_of_cell, vec![0, 1, 1]);
    }

    /// Brute-force collapse: map every (driver, load) cell pair to nodes, drop
    /// pairs that land on one node.
    fn collapse_oracle(nl: &Netlist) -> (usize, BTreeSet<(usize, usize)>) {
        let mut node = vec![0usize; nl.cells.len()];
        let mut next = 0;
        for c in 0..nl.cells.len() {
            if nl.fence_of[c].is_none() {
                node[c] = next;
                next += 1;
            }
        }
        for c in 0..nl.cells.len() {
            if let Some(f) = nl.fence_of[c] {
                node[c] = next + f;
            }
        }
        let mut pairs = BTreeSet::new();
        for net in &nl.nets {
            let d = net.driver.unwrap_or(0);
            for (i, p) in net.pins.iter().enumerate() {
                let (a, b) = (node[net.pins[d].cell], node[p.cell]);
                if i != d && a != b {
                    pairs.insert((a, b));
                }
            }
        }
        (next + nl.fences.len(), pairs)
    }

    #[test]
    fn synthetic_counts_match_oracle() {
        for seed in 0..3 {
            let (nl, pl) = synth_design(SynthParams::new(1000, 1100, 0.6, 2, 2, seed)).unwrap();
            let g = build_graph(&nl, &pl).unwrap();
            let members = nl.fence_of.iter().filter(|f| f.is_some()).count();
            assert_eq!(g.num_nodes, nl.cells.len() - members + nl.fences.len());
            let (n, pairs) = collapse_oracle(&nl);
            assert_eq!(g.num_nodes, n);
            assert_eq!(g.edges.iter().copied().collect::<BTreeSet<_>>(), pairs);
            assert!(g.edges.iter().all(|(a, b)| a != b));
            for c in nl.placeable_cells() {
                assert!(g.origin[g.node_of_cell[c.id]].contains(&c.id));
            }
            assert!(g.names.iter().any(|n| n.starts_with(MACRO_PREFIX)));
        }
    }

    #[test]
    fn build_is_pure() {
        let (nl, pl) = synth_design(SynthParams::new(300, 330, 0.6, 1, 1, 4)).unwrap();
        assert_eq!(build_graph(&nl, &pl).unwrap(), build_graph(&nl, &pl).unwrap());
    }

    #[test]
    fn path_neighborhood() {
        let g = plain_graph(3, vec![(0, 1), (1, 2)]);
        assert_eq!(neighborhood(&g, 0, 2).unwrap(), vec![2]);
        assert_eq!(neighborhood(&g, 0, 1).unwrap(), vec![1]);
        assert!(neighborhood(&g, 5, 1).is_err());
    }

    #[test]
    fn isolated_node_has_empty_neighborhoods() {
        let g = plain_graph(3, vec![(1, 2)]);
        for k in 1..4 {
            assert!(neighborhood(&g, 0, k).unwrap().is_empty());
        }
    }

    #[test]
    fn write_csv_dumps_both_tables() {
        let g = plain_graph(3, vec![(0, 1), (1, 2)]);
        let dir = tempfile::tempdir().unwrap();
        g.write_csv(dir.path()).unwrap();
        let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        assert_eq!(edges.lines().count(), 3);
        let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
        assert_eq!(nodes.lines().count(), 4);
    }

    fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for &(a, b) in edges {
            if a != b {
                d[a][b] = 1;
                d[b][a] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn neighborhood_matches_floyd_warshall() {
        for seed in 0..3 {
            let mut r = rng(seed);
            let n = 200;
            let edges: Vec<(usize, usize)> = (0..300).map(|_| (r.random_range(0..n), r.random_range(0..n))).collect();
            let g = plain_graph(n, edges.clone());
            let d = floyd_warshall(n, &edges);
            for v in (0..n).step_by(7) {
                for k in 1..=3 {
                    let expect: Vec<usize> = (0..n).filter(|&u| d[v][u] == k).collect();
                    assert_eq!(neighborhood(&g, v, k).unwrap(), expect);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn shells_are_disjoint_and_exclude_source(
            n in 2usize..40,
            raw in prop::collection::vec((0usize..40, 0usize..40), 0..80),
            v in 0usize..40,
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let g = plain_graph(n, edges);
            let v = v % n;
            let shells = g.hop_shells(v, 4).unwrap();
            let mut seen = BTreeSet::from([v]);
            for s in &shells {
                for &u in s {
                    prop_assert!(seen.insert(u));
                }
            }
        }
    }
}
