use crate::geom::Rect;
use crate::netlist::{CellId, Netlist, Placement};

const FREE: i32 = -1;
const BLOCKED: i32 = -2;

/// Site-level occupancy over the core bounding box.
#[derive(Debug, Clone)]
pub(crate) struct SiteGrid {
    pub x0: i64,
    pub y0: i64,
    pub w: i64,
    pub h: i64,
    owner: Vec<i32>,
}

impl SiteGrid {
    /// Empty grid; sites outside every row are blocked.
    pub fn new(netlist: &Netlist) -> Self {
        let core = netlist.core();
        let (x0, y0) = (core.x0 as i64, core.y0 as i64);
        let (w, h) = (core.width() as i64, core.height() as i64);
        let mut owner = vec![BLOCKED; (w.max(0) * h.max(0)) as usize];
        for r in &netlist.rows {
            let j = r.y - y0;
            for x in r.x_start..r.x_start + r.num_sites {
                owner[(j * w + x - x0) as usize] = FREE;
            }
        }
        SiteGrid { x0, y0, w, h, owner }
    }

    /// Grid with every non-placeable cell stamped at its (rounded) position.
    pub fn with_fixed(netlist: &Netlist, placement: &Placement) -> Self {
        let mut g = Self::new(netlist);
        for c in netlist.cells.iter().filter(|c| !c.is_placeable()) {
            let (x, y) = placement.get(c.id);
            g.stamp(c.id, x.round() as i64, y.round() as i64, c.width as i64, c.height as i64);
        }
        g
    }

    /// Grid with every cell stamped; for legal placements.
    pub fn occupied(netlist: &Netlist, placement: &Placement) -> Self {
        let mut g = Self::with_fixed(netlist, placement);
        for c in netlist.placeable_cells() {
            let (x, y) = placement.get(c.id);
            g.place(c.id, x as i64, y as i64, c.width as i64, c.height as i64);
        }
        g
    }

    fn idx(&self, x: i64, y: i64) -> Option<usize> {
        let (i, j) = (x - self.x0, y - self.y0);
        (i >= 0 && j >= 0 && i < self.w && j < self.h).then(|| (j * self.w + i) as usize)
    }

    /// Marks the sites owned by `cell`; sites outside rows stay blocked.
    pub fn stamp(&mut self, cell: CellId, x: i64, y: i64, w: i64, h: i64) {
        for yy in y..y + h {
            for xx in x..x + w {
                if let Some(i) = self.idx(xx, yy) {
                    if self.owner[i] != BLOCKED {
                        self.owner[i] = cell as i32;
                    }
                }
            }
        }
    }

    pub fn place(&mut self, cell: CellId, x: i64, y: i64, w: i64, h: i64) {
        self.stamp(cell, x, y, w, h);
    }

    pub fn remove(&mut self, cell: CellId, x: i64, y: i64, w: i64, h: i64) {
        for yy in y..y + h {
            for xx in x..x + w {
                if let Some(i) = self.idx(xx, yy) {
                    if self.owner[i] == cell as i32 {
                        self.owner[i] = FREE;
                    }
                }
            }
        }
    }

    pub fn owner(&self, x: i64, y: i64) -> Option<CellId> {
        self.idx(x, y).and_then(|i| (self.owner[i] >= 0).then_some(self.owner[i] as CellId))
    }

    fn site_ok(&self, x: i64, y: i64, ignore: Option<CellId>) -> bool {
        match self.idx(x, y) {
            Some(i) => {
                let o = self.owner[i];
                o == FREE || (o >= 0 && Some(o as CellId) == ignore)
            }
            None => false,
        }
    }

    pub fn fits(&self, x: i64, y: i64, w: i64, h: i64, ignore: Option<CellId>) -> bool {
        (y..y + h).all(|yy| (x..x + w).all(|xx| self.site_ok(xx, yy, ignore)))
    }

    /// Nearest (by |dx| + |dy|*rh) integer position where a w×h box fits and
    /// `accept` holds, optionally within (max |dx|, max |dy|) of the target.
    /// Ties prefer the lower row, then the lower x.
    #[allow(clippy::too_many_arguments)]
    pub fn nearest_free(
        &self,
        tx: f64,
        ty: f64,
        w: i64,
        h: i64,
        rh: f64,
        ignore: Option<CellId>,
        limit: Option<(i64, i64)>,
        accept: impl Fn(&Rect) -> bool,
    ) -> Option<(i64, i64)> {
        let (ylo, yhi) = (self.y0, self.y0 + self.h - h);
        let (xlo, xhi) = (self.x0, self.x0 + self.w - w);
        if yhi < ylo || xhi < xlo {
            return None;
        }
        let (max_dx, max_dy) = match limit {
            Some((dx, dy)) => (dx as f64, dy as f64),
            None => (f64::INFINITY, f64::INFINITY),
        };
        let mut rows: Vec<i64> = (ylo..=yhi).filter(|&y| (y as f64 - ty).abs() <= max_dy + 0.5).collect();
        rows.sort_by(|&p, &q| (p as f64 - ty).abs().total_cmp(&(q as f64 - ty).abs()).then(p.cmp(&q)));

        let mut best: Option<(f64, i64, i64)> = None;
        let better = |cost: f64, y: i64, x: i64, best: &Option<(f64, i64, i64)>| match best {
            None => true,
            Some((bc, by, bx)) => cost < *bc || (cost == *bc && (y, x) < (*by, *bx)),
        };
        let x_start = tx.round().clamp(xlo as f64, xhi as f64) as i64;
        for y in rows {
            let ycost = (y as f64 - ty).abs() * rh;
            if matches!(best, Some((bc, _, _)) if ycost > bc) {
                break;
            }
            // Walk outward from the target alternating left/right.
            let (mut left, mut right) = (x_start, x_start + 1);
            loop {
                let dl = if left >= xlo { (left as f64 - tx).abs() } else { f64::INFINITY };
                let dr = if right <= xhi { (right as f64 - tx).abs() } else { f64::INFINITY };
                let (x, dx) = if dl <= dr { (left, dl) } else { (right, dr) };
                if !dx.is_finite() || dx > max_dx + 0.5 {
                    break;
                }
                let cost = ycost + dx;
                if matches!(best, Some((bc, _, _)) if cost > bc) {
                    break;
                }
                if dl <= dr {
                    left -= 1;
                } else {
                    right += 1;
                }
                if better(cost, y, x, &best) && self.fits(x, y, w, h, ignore) {
                    let rect = Rect::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64);
                    if accept(&rect) {
                        best = Some((cost, y, x));
                    }
                }
            }
        }
        best.map(|(_, y, x)| (x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::fixtures::*;

    #[test]
    fn nearest_free_skips_occupied() {
        let (nl, _) = three_cell();
        let mut g = SiteGrid::new(&nl);
        g.place(0, 0, 0, 3, 1);
        // Tall rows make the same-row slot at x=3 cheaper than moving up.
        assert_eq!(g.nearest_free(0.0, 0.0, 1, 1, 8.0, None, None, |_| true), Some((3, 0)));
        assert_eq!(g.nearest_free(1.0, 0.0, 1, 1, 1.0, None, None, |_| true), Some((1, 1)));
        assert_eq!(g.nearest_free(1.0, 0.0, 1, 1, 1.0, None, Some((1, 0)), |_| true), None);
        assert_eq!(g.nearest_free(1.0, 0.0, 1, 1, 1.0, Some(0), None, |_| true), Some((1, 0)));
        assert!(g.fits(3, 0, 7, 1, None));
        assert!(!g.fits(3, 0, 8, 1, None));
    }
}
