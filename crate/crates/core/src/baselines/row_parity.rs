use serde::{Deserialize, Serialize};

use super::{cell_id, check_len, select_cells, Signature};
use crate::error::{Error, Result};
use crate::netlist::{Netlist, Placement};
use crate::place::{RegionConstraintSet, SiteGrid};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowParityKey {
    pub cells: Vec<String>,
    pub bits: Vec<bool>,
}

fn row_index(netlist: &Netlist, y: f64) -> i64 {
    (y - netlist.core().y0).round() as i64
}

/// Moves every keyed cell whose row parity disagrees with its bit (1 = odd)
/// to the nearest free position in a row of the right parity. Other cells
/// stay put, so a legal input stays legal.
pub fn row_parity_insert(netlist: &Netlist, placement: &Placement, sig: &Signature) -> Result<(Placement, RowParityKey)> {
    let cells = select_cells(netlist, sig)?;
    let cons = RegionConstraintSet::from_fences(netlist);
    let mut grid = SiteGrid::occupied(netlist, placement);
    let mut out = placement.clone();
    let rh = netlist.row_height();
    let y0 = netlist.core().y0;
    for (&c, &bit) in cells.iter().zip(&sig.bits) {
        let (x, y) = out.get(c);
        let want = bit as i64;
        if row_index(netlist, y).rem_euclid(2) == want {
            continue;
        }
        let cell = &netlist.cells[c];
        let (w, h) = (cell.width as i64, cell.height as i64);
        grid.remove(c, x as i64, y as i64, w, h);
        let (nx, ny) = grid
            .nearest_free(x, y, w, h, rh, None, None, |r| {
                (r.y0 - y0).round() as i64 % 2 == want && cons.allows(c, r)
            })
            .ok_or_else(|| Error::NoLegalSite(cell.name.clone()))?;
        grid.place(c, nx, ny, w, h);
        out.set(c, nx as f64, ny as f64);
    }
    let key = RowParityKey { cells: cells.iter().map(|&c| netlist.cells[c].name.clone()).collect(), bits: sig.bits.clone() };
    Ok((out, key))
}

/// Percentage of keyed cells whose row parity matches their bit.
pub fn row_parity_extract(netlist: &Netlist, placement: &Placement, key: &RowParityKey, sig: &Signature) -> Result<f64> {
    check_len(key.cells.len(), sig)?;
    let mut ok = 0;
    for (name, &bit) in key.cells.iter().zip(&sig.bits) {
        let c = cell_id(netlist, name)?;
        if row_index(netlist, placement.get(c).1).rem_euclid(2) == bit as i64 {
            ok += 1;
        }
    }
    Ok(100.0 * ok as f64 / key.cells.len() as f64)
}
