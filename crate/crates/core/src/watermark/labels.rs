//! Degradation labels for candidate watermark centers.

use std::time::Instant;

use rayon::prelude::*;

use super::{insert, transform_label, WatermarkSecret};
use crate::error::{Error, Result};
use crate::graph::{GridSample, LayoutGraph};
use crate::netlist::{CellId, Netlist, Placement};
use crate::place::{hpwl, PlacerConfig};
use crate::rng::sub_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelEntry {
    pub cell: CellId,
    /// Wirelength after watermarking over the baseline; infinite when infeasible.
    pub raw: f64,
    pub label: f64,
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub entries: Vec<LabelEntry>,
    pub beta: f64,
    pub baseline_hpwl: f64,
    /// Wall-clock seconds spent collecting.
    pub seconds: f64,
}

impl LabelSet {
    /// (graph node, label) pairs for training.
    pub fn node_labels(&self, graph: &LayoutGraph) -> Vec<(usize, f64)> {
        self.entries.iter().map(|e| (graph.node_of_cell[e.cell], e.label)).collect()
    }

    pub fn num_infeasible(&self) -> usize {
        self.entries.iter().filter(|e| e.infeasible).count()
    }
}

/// Watermarks the baseline once per sampled cell and records the resulting
/// wirelength ratio. Runs in parallel; every sample gets its own seed derived
/// from `config.seed` and the cell name, so results do not depend on scheduling.
pub fn collect_labels(
    netlist: &Netlist,
    baseline: &Placement,
    samples: &GridSample,
    config: &PlacerConfig,
    beta: f64,
    n: u32,
) -> Result<LabelSet> {
    if samples.cells.is_empty() {
        return Err(Error::Empty("no sampled cells to label".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    let start = Instant::now();
    let base = hpwl(netlist, baseline)?;
    if base == 0.0 {
        return Err(Error::InvalidArgument("baseline wirelength is zero".into()));
    }
    let entries = samples
        .cells
        .par_iter()
        .map(|&cell| {
            let seed = sub_seed(config.seed, &format!("label/{}", netlist.cells[cell].name));
            let cfg = config.clone().with_seed(seed);
            let outcome = WatermarkSecret::capture(netlist, baseline, cell, n, seed)
                .and_then(|s| insert(netlist, baseline, &s, &cfg))
                .and_then(|p| hpwl(netlist, &p));
            match outcome {
                Ok(wl) => {
                    let raw = wl / base;
                    LabelEntry { cell, raw, label: transform_label(raw, beta), infeasible: false }
                }
                Err(_) => LabelEntry { cell, raw: f64::INFINITY, label: 1.0, infeasible: true },
            }
        })
        .collect();
    Ok(LabelSet { entries, beta, baseline_hpwl: base, seconds: start.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::grid_sample;
    use crate::netlist::fixtures::*;
    use crate::netlist::{synth_design, SynthParams};
    use crate::place::{place_flow, RegionConstraintSet};

    #[test]
    fn region_already_satisfied_gives_zero_label() {
        // Two clusters of 1-site cells on a 40x4 grid, nothing straddles x = 20.
        let cells = (0..8).map(|i| std_cell(i, &format!("c{i}"), 1)).collect();
        let nets = vec![net(0, &[0, 1, 2, 3]), net(1, &[4, 5, 6, 7]), net(2, &[3, 4])];
        let nl = Netlist::new(cells, nets, rows(4, 40, 1.0), vec![], vec![None; 8]).unwrap();
        let pl = Placement::new(vec![
            (8.0, 1.0), (9.0, 1.0), (8.0, 2.0), (9.0, 2.0),
            (30.0, 1.0), (31.0, 1.0), (30.0, 2.0), (31.0, 2.0),
        ]);
        let samples = GridSample { x0: 0.0, y0: 0.0, tile_w: 4.0, tile_h: 4.0, nx: 1, ny: 1, cells: vec![0], seed: 0 };
        let ls = collect_labels(&nl, &pl, &samples, &PlacerConfig::incremental(), 0.01, 4).unwrap();
        let e = &ls.entries[0];
        assert!(!e.infeasible);
        assert!(e.raw <= 1.0 + 1e-9, "{}", e.raw);
        assert_eq!(e.label, 0.0);
    }

    #[test]
    fn infeasible_region_labeled_one() {
        // Five unit cells captured by a 2x2 region cannot all fit inside it.
        let cells = (0..6).map(|i| std_cell(i, &format!("c{i}"), 1)).collect();
        let nl = Netlist::new(cells, vec![net(0, &[0, 1, 2, 3, 4, 5])], rows(4, 20, 1.0), vec![], vec![None; 6]).unwrap();
        let pl = Placement::new(vec![(10.0, 1.0), (11.0, 1.0), (10.0, 2.0), (11.0, 2.0), (11.5, 2.0), (2.0, 0.0)]);
        let samples = GridSample { x0: 0.0, y0: 0.0, tile_w: 2.0, tile_h: 2.0, nx: 1, ny: 1, cells: vec![0], seed: 0 };
        let ls = collect_labels(&nl, &pl, &samples, &PlacerConfig::incremental(), 0.01, 2).unwrap();
        assert!(ls.entries[0].infeasible);
        assert_eq!(ls.entries[0].label, 1.0);
        assert_eq!(ls.num_infeasible(), 1);
    }

    #[test]
    fn labels_in_unit_range_on_synthetic_design() {
        let (nl, init) = synth_design(SynthParams::new(600, 660, 0.7, 1, 1, 8)).unwrap();
        let base = place_flow(&nl, &init, &RegionConstraintSet::from_fences(&nl), &PlacerConfig::default()).unwrap();
        let size = super::super::region_size(&nl, 6);
        let samples = grid_sample(&nl, &base, size, 1).unwrap();
        let ls = collect_labels(&nl, &base, &samples, &PlacerConfig::incremental(), 0.01, 6).unwrap();
        assert_eq!(ls.entries.len(), samples.cells.len());
        assert!(ls.entries.iter().all(|e| (0.0..=1.0).contains(&e.label) && e.raw > 0.0));
        assert!(ls.seconds >= 0.0);
        let again = collect_labels(&nl, &base, &samples, &PlacerConfig::incremental(), 0.01, 6).unwrap();
        assert_eq!(
            ls.entries.iter().map(|e| e.raw).collect::<Vec<_>>(),
            again.entries.iter().map(|e| e.raw).collect::<Vec<_>>()
        );
    }
}
