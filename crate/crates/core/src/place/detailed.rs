use rand::seq::SliceRandom;

use super::{hpwl, net_hpwl, PlacerConfig, RegionConstraintSet, SiteGrid};
use crate::error::Result;
use crate::netlist::{CellId, NetId, Netlist, Placement};
use crate::rng::rng;

const EPS: f64 = 1e-9;

struct State<'a> {
    netlist: &'a Netlist,
    constraints: &'a RegionConstraintSet,
    pl: Placement,
    grid: SiteGrid,
    rh: f64,
    scratch: Vec<NetId>,
}

impl State<'_> {
    fn nets_cost(&mut self, cells: &[CellId]) -> f64 {
        self.scratch.clear();
        for &c in cells {
            self.scratch.extend_from_slice(self.netlist.nets_of(c));
        }
        self.scratch.sort_unstable();
        self.scratch.dedup();
        self.scratch.iter().map(|&n| net_hpwl(self.netlist, &self.pl, &self.netlist.nets[n])).sum()
    }

    /// Wirelength change from moving `moves` (cell, x, y); positions restored afterwards.
    fn delta(&mut self, moves: &[(CellId, f64, f64)]) -> f64 {
        let cells: Vec<CellId> = moves.iter().map(|m| m.0).collect();
        let before = self.nets_cost(&cells);
        let saved: Vec<(f64, f64)> = cells.iter().map(|&c| self.pl.get(c)).collect();
        for &(c, x, y) in moves {
            self.pl.set(c, x, y);
        }
        let after = self.nets_cost(&cells);
        for (&c, &(x, y)) in cells.iter().zip(&saved) {
            self.pl.set(c, x, y);
        }
        after - before
    }

    fn apply(&mut self, moves: &[(CellId, f64, f64)]) {
        for &(c, _, _) in moves {
            let (x, y) = self.pl.get(c);
            let cell = &self.netlist.cells[c];
            self.grid.remove(c, x as i64, y as i64, cell.width as i64, cell.height as i64);
        }
        for &(c, x, y) in moves {
            let cell = &self.netlist.cells[c];
            self.grid.place(c, x as i64, y as i64, cell.width as i64, cell.height as i64);
            self.pl.set(c, x, y);
        }
    }

    fn allowed(&self, c: CellId, x: f64, y: f64) -> bool {
        let r = self.netlist.cells[c].footprint(x, y);
        self.constraints.allows(c, &r)
    }

    fn swappable(&self, c: CellId) -> bool {
        let cell = &self.netlist.cells[c];
        cell.is_placeable() && cell.height == 1
    }

    fn swap_pass(&mut self) -> bool {
        let mut improved = false;
        for y in self.grid.y0..self.grid.y0 + self.grid.h {
            let mut row: Vec<CellId> = Vec::new();
            for x in self.grid.x0..self.grid.x0 + self.grid.w {
                if let Some(c) = self.grid.owner(x, y) {
                    if row.last() != Some(&c) {
                        row.push(c);
                    }
                }
            }
            for i in 0..row.len().saturating_sub(1) {
                let (a, b) = (row[i], row[i + 1]);
                if !self.swappable(a) || !self.swappable(b) {
                    continue;
                }
                let (ax, ay) = self.pl.get(a);
                let (bx, by) = self.pl.get(b);
                if ay != y as f64 || by != y as f64 {
                    continue;
                }
                let aw = self.netlist.cells[a].width as f64;
                let bw = self.netlist.cells[b].width as f64;
                let (nbx, nax) = (ax, bx + bw - aw);
                if !self.allowed(a, nax, ay) || !self.allowed(b, nbx, by) {
                    continue;
                }
                let moves = [(a, nax, ay), (b, nbx, by)];
                if self.delta(&moves) < -EPS {
                    self.apply(&moves);
                    row.swap(i, i + 1);
                    improved = true;
                }
            }
        }
        improved
    }

    /// Median of the bounding boxes of a cell's nets, ignoring the cell itself.
    fn optimal_point(&self, c: CellId) -> Option<(f64, f64)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in self.netlist.nets_of(c) {
            let net = &self.netlist.nets[n];
            let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in net.pins.iter().filter(|p| p.cell != c) {
                let (x, y) = self.pl.pin_position(self.netlist, p);
                xlo = xlo.min(x);
                xhi = xhi.max(x);
                ylo = ylo.min(y);
                yhi = yhi.max(y);
            }
            if xlo.is_finite() {
                xs.extend([xlo, xhi]);
                ys.extend([ylo, yhi]);
            }
        }
        if xs.is_empty() {
            return None;
        }
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let cell = &self.netlist.cells[c];
        let mx = 0.5 * (xs[(xs.len() - 1) / 2] + xs[xs.len() / 2]);
        let my = 0.5 * (ys[(ys.len() - 1) / 2] + ys[ys.len() / 2]);
        Some((mx - 0.5 * cell.width as f64, my / self.rh - 0.5 * cell.height as f64))
    }

    fn relocate_pass(&mut self, order: &[CellId], config: &PlacerConfig) -> bool {
        let mut improved = false;
        for &c in order {
            let Some((tx, ty)) = self.optimal_point(c) else { continue };
            let cell = &self.netlist.cells[c];
            let (w, h) = (cell.width as i64, cell.height as i64);
            let (cx, cy) = self.pl.get(c);
            let mut best: Option<(f64, f64, f64)> = None;
            let ty_r = ty.round() as i64;
            for dy in -config.window_rows..=config.window_rows {
                let row = ty_r + dy;
                let Some((x, y)) = self.grid.nearest_free(
                    tx,
                    row as f64,
                    w,
                    h,
                    self.rh,
                    Some(c),
                    Some((config.window_sites, 0)),
                    |r| self.constraints.allows(c, r),
                ) else {
                    continue;
                };
                let (x, y) = (x as f64, y as f64);
                if (x, y) == (cx, cy) {
                    continue;
                }
                let d = self.delta(&[(c, x, y)]);
                if d < -EPS && best.is_none_or(|b| d < b.0) {
                    best = Some((d, x, y));
                }
            }
            if let Some((_, x, y)) = best {
                self.apply(&[(c, x, y)]);
                improved = true;
            }
        }
        improved
    }
}

/// Local-search refinement of a legal placement: adjacent swaps within rows
/// and single-cell relocation toward each cell's optimal region. Only
/// wirelength-reducing moves that keep every region constraint are accepted,
/// so the output is legal and never longer than the input.
pub fn detailed_place(
    netlist: &Netlist,
    placement: &Placement,
    constraints: &RegionConstraintSet,
    config: &PlacerConfig,
) -> Result<Placement> {
    let start = hpwl(netlist, placement)?;
    let grid = SiteGrid::occupied(netlist, placement);
    let mut st = State {
        netlist,
        constraints,
        pl: placement.clone(),
        grid,
        rh: netlist.row_height(),
        scratch: Vec::new(),
    };
    let mut r = rng(config.seed);
    let mut order: Vec<CellId> = netlist.placeable_cells().map(|c| c.id).collect();
    for _ in 0..config.detailed_passes {
        let a = st.swap_pass();
        order.shuffle(&mut r);
        let b = st.relocate_pass(&order, config);
        if !a && !b {
            break;
        }
    }
    if hpwl(netlist, &st.pl)? > start {
        return Ok(placement.clone());
    }
    Ok(st.pl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use crate::netlist::fixtures::*;
    use crate::netlist::{validate, Netlist, Region, RegionKind};
    use crate::place::Polarity;

    /// Row of four 1-site cells: a b c d. Nets a-c and b-d pull c left and b right.
    fn four_cell() -> (Netlist, Placement) {
        let cells = (0..4).map(|i| std_cell(i, &["a", "b", "c", "d"][i], 1)).collect();
        let nets = vec![net(0, &[0, 2]), net(1, &[1, 3])];
        let nl = Netlist::new(cells, nets, rows(1, 4, 1.0), vec![], vec![None; 4]).unwrap();
        let pl = Placement::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        (nl, pl)
    }

    #[test]
    fn improving_swap_is_applied() {
        let (nl, pl) = four_cell();
        // Oracle: best wirelength over all single adjacent swaps.
        let mut best = hpwl(&nl, &pl).unwrap();
        for i in 0..3 {
            let mut q = pl.clone();
            let (a, b) = (q.pos[i], q.pos[i + 1]);
            q.pos[i] = b;
            q.pos[i + 1] = a;
            best = best.min(hpwl(&nl, &q).unwrap());
        }
        assert_eq!(best, 2.0);
        let cfg = PlacerConfig { detailed_passes: 1, window_sites: 0, window_rows: 0, ..Default::default() };
        let out = detailed_place(&nl, &pl, &RegionConstraintSet::new(), &cfg).unwrap();
        assert_eq!(out.get(1), (2.0, 0.0));
        assert_eq!(out.get(2), (1.0, 0.0));
        assert_eq!(hpwl(&nl, &out).unwrap(), best);
    }

    #[test]
    fn optimal_layout_is_a_fixpoint() {
        let (nl, pl) = four_cell();
        let opt = Placement::new(vec![(0.0, 0.0), (2.0, 0.0), (1.0, 0.0), (3.0, 0.0)]);
        let _ = pl;
        let out = detailed_place(&nl, &opt, &RegionConstraintSet::new(), &PlacerConfig::default()).unwrap();
        assert_eq!(out, opt);
    }

    #[test]
    fn member_never_leaves_region() {
        // Member c0 at the region's right edge is pulled hard to the right by its net.
        let cells = (0..3).map(|i| std_cell(i, &format!("c{i}"), 1)).collect();
        let nl = Netlist::new(cells, vec![net(0, &[0, 1]), net(1, &[0, 2])], rows(2, 20, 1.0), vec![], vec![None; 3]).unwrap();
        let pl = Placement::new(vec![(4.0, 0.0), (19.0, 0.0), (19.0, 1.0)]);
        let mut cons = RegionConstraintSet::new();
        let r = Region::new(0, vec![Rect::new(0.0, 0.0, 5.0, 2.0)], RegionKind::Watermark).unwrap();
        cons.push(&nl, r.clone(), vec![0], Polarity::MembersInsideOthersOutside).unwrap();
        let cfg = PlacerConfig { window_sites: 30, ..Default::default() };
        let out = detailed_place(&nl, &pl, &cons, &cfg).unwrap();
        assert!(r.contains_rect(&out.footprint(&nl, 0)));
        assert!(validate(&nl, &out).is_clean());
        assert!(hpwl(&nl, &out).unwrap() <= hpwl(&nl, &pl).unwrap());
    }
}
