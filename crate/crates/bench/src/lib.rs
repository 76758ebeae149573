//! Shared fixtures for the criterion benches.

use regionmark::graph::{build_graph, LayoutGraph};
use regionmark::netlist::{synth_design, Netlist, Placement, SynthParams};
use regionmark::place::{place_flow, PlacerConfig, RegionConstraintSet};
use regionmark::Result;

pub struct Fixture {
    pub netlist: Netlist,
    pub placement: Placement,
    pub graph: LayoutGraph,
}

/// A placed synthetic design with `cells` standard cells and its layout graph.
pub fn placed(cells: usize, seed: u64) -> Result<Fixture> {
    let (netlist, init) = synth_design(SynthParams::new(cells, cells + cells / 10, 0.7, 2, 1, seed))?;
    let cons = RegionConstraintSet::from_fences(&netlist);
    let placement = place_flow(&netlist, &init, &cons, &PlacerConfig::default().with_seed(seed))?;
    let graph = build_graph(&netlist, &placement)?;
    Ok(Fixture { netlist, placement, graph })
}
