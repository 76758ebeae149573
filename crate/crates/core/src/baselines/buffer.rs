use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_len, Signature};
use crate::error::{Error, Result};
use crate::netlist::{Cell, CellId, CellKind, Net, NetId, Netlist, Pin, Placement, BUFFER_PREFIX};
use crate::place::{legalize, PlacerConfig, RegionConstraintSet, SiteGrid};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferKeyEntry {
    /// Name of the original net the buffers were spliced into.
    pub net: String,
    pub bit: bool,
    pub buffers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferKey {
    pub entries: Vec<BufferKeyEntry>,
}

fn buffers_for(bit: bool) -> usize {
    if bit {
        1
    } else {
        2
    }
}

/// Splices one buffer (bit 1) or a chain of two (bit 0) between the driver
/// and the loads of each keyed net. Buffers are single-site cells placed at
/// the nearest free site to the net's pin centroid within the relocation
/// window of `config`; when the window is full they are dropped on the
/// centroid and the layout is legalized afterwards.
pub fn buffer_insert(
    netlist: &Netlist,
    placement: &Placement,
    sig: &Signature,
    config: &PlacerConfig,
) -> Result<(Netlist, Placement, BufferKey)> {
    let pool: Vec<NetId> = netlist.nets.iter().filter(|n| n.pins.len() >= 2).map(|n| n.id).collect();
    if sig.len() > pool.len() {
        return Err(Error::InvalidArgument(format!("signature of {} bits exceeds the {} multi-pin nets", sig.len(), pool.len())));
    }
    let chosen: Vec<NetId> = SplitMix64::new(sig.seed).choose_distinct(pool.len(), sig.len()).into_iter().map(|i| pool[i]).collect();

    let cons = RegionConstraintSet::from_fences(netlist);
    let mut grid = SiteGrid::occupied(netlist, placement);
    let rh = netlist.row_height();
    let core = netlist.core();
    let mut nets = netlist.nets.clone();
    let mut new_cells = Vec::new();
    let mut pos = placement.pos.clone();
    let mut entries = Vec::with_capacity(chosen.len());
    let mut overlapping = false;
    for (i, (&n, &bit)) in chosen.iter().zip(&sig.bits).enumerate() {
        let net = &netlist.nets[n];
        let pts: Vec<(f64, f64)> = net.pins.iter().map(|p| placement.pin_position(netlist, p)).collect();
        let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64 / rh;
        let (tx, ty) = (cx - 0.5, cy - 0.5);

        let mut chain: Vec<CellId> = Vec::new();
        for j in 0..buffers_for(bit) {
            let id = netlist.cells.len() + new_cells.len();
            let name = format!("{BUFFER_PREFIX}{i}_{j}");
            let window = Some((config.window_sites, config.window_rows));
            match grid.nearest_free(tx, ty, 1, 1, rh, None, window, |r| cons.allows(usize::MAX, r)) {
                Some((x, y)) => {
                    grid.place(id, x, y, 1, 1);
                    pos.push((x as f64, y as f64));
                }
                None => {
                    overlapping = true;
                    let x = tx.round().clamp(core.x0, core.x1 - 1.0);
                    let y = ty.round().clamp(core.y0, core.y1 - 1.0);
                    pos.push((x, y));
                }
            }
            new_cells.push(Cell { id, name, width: 1, height: 1, kind: CellKind::Standard, movable: true });
            chain.push(id);
        }

        let d = net.driver_index();
        let driver = net.pins[d];
        let loads: Vec<Pin> = net.pins.iter().enumerate().filter(|&(k, _)| k != d).map(|(_, p)| *p).collect();
        nets[n] = Net { id: n, name: net.name.clone(), pins: vec![driver, Pin::at_center(chain[0])], driver: Some(0) };
        for (j, &b) in chain.iter().enumerate() {
            let mut pins = vec![Pin::at_center(b)];
            match chain.get(j + 1) {
                Some(&next) => pins.push(Pin::at_center(next)),
                None => pins.extend_from_slice(&loads),
            }
            nets.push(Net { id: nets.len(), name: format!("{}__wm{}", net.name, j + 1), pins, driver: Some(0) });
        }
        entries.push(BufferKeyEntry {
            net: net.name.clone(),
            bit,
            buffers: chain.iter().map(|&b| new_cells[b - netlist.cells.len()].name.clone()).collect(),
        });
    }
    let out = netlist.with_edits(new_cells, nets)?;
    let mut pl = Placement::new(pos);
    if overlapping {
        pl = legalize(&out, &pl, &RegionConstraintSet::from_fences(&out))?;
    }
    Ok((out, pl, BufferKey { entries }))
}

/// Number of buffers chained behind the driver of net `start`.
fn chain_length(netlist: &Netlist, by_name: &HashMap<&str, NetId>, start: &str) -> usize {
    let Some(&first) = by_name.get(start) else { return 0 };
    let mut net = first;
    let mut count = 0;
    while count <= netlist.nets.len() {
        let n = &netlist.nets[net];
        let d = n.driver_index();
        let buf = n
            .pins
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != d)
            .map(|(_, p)| p.cell)
            .find(|&c| netlist.cells[c].name.starts_with(BUFFER_PREFIX));
        let Some(b) = buf else { break };
        count += 1;
        let next = netlist.nets_of(b).iter().copied().find(|&m| {
            let m = &netlist.nets[m];
            m.pins[m.driver_index()].cell == b
        });
        match next {
            Some(m) => net = m,
            None => break,
        }
    }
    count
}

/// Percentage of keyed nets whose buffer chain length encodes their bit.
/// Unknown nets count as mismatches.
pub fn buffer_extract(netlist: &Netlist, key: &BufferKey, sig: &Signature) -> Result<f64> {
    check_len(key.entries.len(), sig)?;
    let by_name: HashMap<&str, NetId> = netlist.nets.iter().map(|n| (n.name.as_str(), n.id)).collect();
    let ok = key
        .entries
        .iter()
        .zip(&sig.bits)
        .filter(|(e, &bit)| chain_length(netlist, &by_name, &e.net) == buffers_for(bit))
        .count();
    Ok(100.0 * ok as f64 / key.entries.len() as f64)
}
