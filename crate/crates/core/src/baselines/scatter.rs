use serde::{Deserialize, Serialize};

use super::{cell_id, check_len, select_cells, Signature};
use crate::error::{Error, Result};
use crate::netlist::{Netlist, Placement};
use crate::place::{RegionConstraintSet, SiteGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterKeyEntry {
    pub cell: String,
    pub bit: bool,
    /// Position before insertion.
    pub origin: (f64, f64),
    /// Expected displacement: one row up for a 1, one site right for a 0.
    pub offset: (f64, f64),
    /// Target was occupied, so the cell was left in place.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterKey {
    pub entries: Vec<ScatterKeyEntry>,
}

impl ScatterKey {
    pub fn num_skipped(&self) -> usize {
        self.entries.iter().filter(|e| e.skipped).count()
    }
}

/// Nudges each keyed cell by one row (bit 1) or one site (bit 0) when the
/// destination is free; otherwise records it as skipped.
pub fn cell_scatter_insert(netlist: &Netlist, placement: &Placement, sig: &Signature) -> Result<(Placement, ScatterKey)> {
    let cells = select_cells(netlist, sig)?;
    let cons = RegionConstraintSet::from_fences(netlist);
    let mut grid = SiteGrid::occupied(netlist, placement);
    let mut out = placement.clone();
    let mut entries = Vec::with_capacity(cells.len());
    for (&c, &bit) in cells.iter().zip(&sig.bits) {
        let cell = &netlist.cells[c];
        let (x, y) = out.get(c);
        let offset = if bit { (0.0, 1.0) } else { (1.0, 0.0) };
        let (nx, ny) = (x + offset.0, y + offset.1);
        let (w, h) = (cell.width as i64, cell.height as i64);
        let free = grid.fits(nx as i64, ny as i64, w, h, Some(c)) && cons.allows(c, &cell.footprint(nx, ny));
        if free {
            grid.remove(c, x as i64, y as i64, w, h);
            grid.place(c, nx as i64, ny as i64, w, h);
            out.set(c, nx, ny);
        }
        entries.push(ScatterKeyEntry { cell: cell.name.clone(), bit, origin: (x, y), offset, skipped: !free });
    }
    Ok((out, ScatterKey { entries }))
}

/// Percentage of non-skipped keyed cells found at origin + offset.
pub fn cell_scatter_extract(netlist: &Netlist, placement: &Placement, key: &ScatterKey, sig: &Signature) -> Result<f64> {
    check_len(key.entries.len(), sig)?;
    let mut total = 0;
    let mut ok = 0;
    for e in key.entries.iter().filter(|e| !e.skipped) {
        let c = cell_id(netlist, &e.cell)?;
        total += 1;
        if placement.get(c) == (e.origin.0 + e.offset.0, e.origin.1 + e.offset.1) {
            ok += 1;
        }
    }
    if total == 0 {
        return Err(Error::Empty("every keyed cell was skipped".into()));
    }
    Ok(100.0 * ok as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::constraint_perturb;
    use crate::netlist::fixtures::*;
    use crate::netlist::{synth_design, validate, SynthParams};
    use crate::place::{place_flow, PlacerConfig};

    #[test]
    fn free_neighbor_zero_bit_moves_right() {
        let nl = Netlist::new(vec![std_cell(0, "a", 2)], vec![], rows(3, 8, 1.0), vec![], vec![None]).unwrap();
        let pl = Placement::new(vec![(3.0, 1.0)]);
        let (out, key) = cell_scatter_insert(&nl, &pl, &Signature::new(vec![false], 0).unwrap()).unwrap();
        assert_eq!(out.get(0), (4.0, 1.0));
        assert!(!key.entries[0].skipped);
    }

    #[test]
    fn occupied_target_skipped() {
        // Cell a at the top row cannot move up.
        let nl = Netlist::new(vec![std_cell(0, "a", 2)], vec![], rows(2, 8, 1.0), vec![], vec![None]).unwrap();
        let pl = Placement::new(vec![(3.0, 1.0)]);
        let sig = Signature::new(vec![true], 0).unwrap();
        let (out, key) = cell_scatter_insert(&nl, &pl, &sig).unwrap();
        assert_eq!(out, pl);
        assert_eq!(key.num_skipped(), 1);
        assert!(cell_scatter_extract(&nl, &out, &key, &sig).is_err());
    }

    #[test]
    fn round_trip_legal_and_perturbation_detected() {
        let (nl, init) = synth_design(SynthParams::new(400, 440, 0.6, 1, 1, 4)).unwrap();
        let pl = place_flow(&nl, &init, &RegionConstraintSet::from_fences(&nl), &PlacerConfig::default()).unwrap();
        let sig = Signature::random(150, 4).unwrap();
        let (out, key) = cell_scatter_insert(&nl, &pl, &sig).unwrap();
        assert!(validate(&nl, &out).is_clean());
        assert!(key.num_skipped() < 150);
        assert_eq!(cell_scatter_extract(&nl, &out, &key, &sig).unwrap(), 100.0);
        let attacked = constraint_perturb(&nl, &out, 0.1, 1).unwrap();
        assert!(cell_scatter_extract(&nl, &attacked, &key, &sig).unwrap() < 100.0);
    }

    #[test]
    fn empty_key_is_error() {
        let (nl, pl) = three_cell();
        let sig = Signature::new(vec![true], 0).unwrap();
        assert!(cell_scatter_extract(&nl, &pl, &ScatterKey { entries: vec![] }, &sig).is_err());
    }
}
