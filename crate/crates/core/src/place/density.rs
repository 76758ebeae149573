use crate::netlist::{Netlist, Placement};

use super::PlacerConfig;

/// Bin occupancy map. Movable cell area is assigned to the four nearest bin
/// centers with bilinear (cloud-in-cell) weights; fixed cells reduce capacity.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub x0: f64,
    pub y0: f64,
    /// Bin width in sites. Bins are one row tall.
    pub bin_w: f64,
    pub nx: usize,
    pub ny: usize,
    pub capacity: Vec<f64>,
    pub occupancy: Vec<f64>,
}

/// Up to four (bin, weight, d weight/dx, d weight/dy) contributions.
type Spread = [(usize, f64, f64, f64); 4];

impl DensityGrid {
    pub fn new(netlist: &Netlist, placement: &Placement, bin_size: u32) -> Self {
        let core = netlist.core();
        let bin_w = bin_size.max(1) as f64;
        let nx = ((core.width() / bin_w).ceil() as usize).max(1);
        let ny = (core.height().ceil() as usize).max(1);
        let mut capacity = vec![0.0; nx * ny];
        for row in &netlist.rows {
            let j = (row.y as f64 - core.y0) as usize;
            if j >= ny {
                continue;
            }
            let (rx0, rx1) = (row.x_start as f64, (row.x_start + row.num_sites) as f64);
            for i in 0..nx {
                let bx0 = core.x0 + i as f64 * bin_w;
                let ov = (bx0 + bin_w).min(rx1) - bx0.max(rx0);
                if ov > 0.0 {
                    capacity[j * nx + i] += ov;
                }
            }
        }
        for c in netlist.cells.iter().filter(|c| !c.is_placeable()) {
            let r = placement.footprint(netlist, c.id);
            if !r.x0.is_finite() {
                continue;
            }
            for j in 0..ny {
                let by0 = core.y0 + j as f64;
                let oy = (by0 + 1.0).min(r.y1) - by0.max(r.y0);
                if oy <= 0.0 {
                    continue;
                }
                for i in 0..nx {
                    let bx0 = core.x0 + i as f64 * bin_w;
                    let ox = (bx0 + bin_w).min(r.x1) - bx0.max(r.x0);
                    if ox > 0.0 {
                        let cap = &mut capacity[j * nx + i];
                        *cap = (*cap - ox * oy).max(0.0);
                    }
                }
            }
        }
        DensityGrid { x0: core.x0, y0: core.y0, bin_w, nx, ny, capacity, occupancy: vec![0.0; nx * ny] }
    }

    pub fn clear(&mut self) {
        self.occupancy.iter_mut().for_each(|o| *o = 0.0);
    }

    fn axis(u: f64, n: usize) -> [(usize, f64, f64); 2] {
        // u is the continuous bin coordinate of the cell center, bin centers at k + 0.5.
        let t = u - 0.5;
        if n == 1 || t <= 0.0 {
            return [(0, 1.0, 0.0), (0, 0.0, 0.0)];
        }
        if t >= (n - 1) as f64 {
            return [(n - 1, 1.0, 0.0), (n - 1, 0.0, 0.0)];
        }
        let k = t.floor() as usize;
        let f = t - k as f64;
        [(k, 1.0 - f, -1.0), (k + 1, f, 1.0)]
    }

    /// Bilinear weights of a cell centered at (cx sites, cy rows).
    fn spread(&self, cx: f64, cy: f64) -> Spread {
        let ax = Self::axis((cx - self.x0) / self.bin_w, self.nx);
        let ay = Self::axis(cy - self.y0, self.ny);
        let mut out = [(0, 0.0, 0.0, 0.0); 4];
        let mut k = 0;
        for &(i, wx, dx) in &ax {
            for &(j, wy, dy) in &ay {
                out[k] = (j * self.nx + i, wx * wy, dx / self.bin_w * wy, wx * dy);
                k += 1;
            }
        }
        out
    }

    pub fn add(&mut self, area: f64, cx: f64, cy: f64) {
        for (b, w, _, _) in self.spread(cx, cy) {
            self.occupancy[b] += area * w;
        }
    }

    /// Adds every placeable cell at its current position.
    pub fn fill(&mut self, netlist: &Netlist, placement: &Placement) {
        self.clear();
        for c in netlist.placeable_cells() {
            let (x, y) = placement.get(c.id);
            self.add(c.area(), x + 0.5 * c.width as f64, y + 0.5 * c.height as f64);
        }
    }

    pub fn overflow(&self, bin: usize) -> f64 {
        (self.occupancy[bin] - self.capacity[bin]).max(0.0)
    }

    /// Sum over bins of squared overflow.
    pub fn penalty(&self) -> f64 {
        (0..self.occupancy.len()).map(|b| self.overflow(b).powi(2)).sum()
    }

    pub fn total_occupancy(&self) -> f64 {
        self.occupancy.iter().sum()
    }

    /// Gradient of the penalty with respect to a cell's center (sites, rows).
    pub fn penalty_grad(&self, area: f64, cx: f64, cy: f64) -> (f64, f64) {
        let (mut gx, mut gy) = (0.0, 0.0);
        for (b, _, dx, dy) in self.spread(cx, cy) {
            let o = self.overflow(b);
            if o > 0.0 {
                gx += 2.0 * o * area * dx;
                gy += 2.0 * o * area * dy;
            }
        }
        (gx, gy)
    }

    /// Overflow field after three box blurs of half-width `rx` bins and `ry`
    /// rows. With zero radii this is the plain overflow.
    pub(crate) fn smoothed_overflow(&self, rx: usize, ry: usize) -> Vec<f64> {
        let mut f: Vec<f64> = (0..self.occupancy.len()).map(|b| self.overflow(b)).collect();
        let mut tmp = vec![0.0; f.len()];
        for _ in 0..3 {
            if rx > 0 {
                for j in 0..self.ny {
                    let row = &f[j * self.nx..(j + 1) * self.nx];
                    box_blur(row, rx, &mut tmp[j * self.nx..(j + 1) * self.nx]);
                }
                std::mem::swap(&mut f, &mut tmp);
            }
            if ry > 0 {
                let mut col = vec![0.0; self.ny];
                let mut out = vec![0.0; self.ny];
                for i in 0..self.nx {
                    for j in 0..self.ny {
                        col[j] = f[j * self.nx + i];
                    }
                    box_blur(&col, ry, &mut out);
                    for j in 0..self.ny {
                        f[j * self.nx + i] = out[j];
                    }
                }
            }
        }
        f
    }

    /// Same as [`penalty_grad`](Self::penalty_grad) with `field` in place of the overflow.
    pub(crate) fn field_grad(&self, field: &[f64], area: f64, cx: f64, cy: f64) -> (f64, f64) {
        let (mut gx, mut gy) = (0.0, 0.0);
        for (b, _, dx, dy) in self.spread(cx, cy) {
            gx += 2.0 * field[b] * area * dx;
            gy += 2.0 * field[b] * area * dy;
        }
        (gx, gy)
    }
}

/// Moving average of half-width r; windows are truncated at the ends.
fn box_blur(src: &[f64], r: usize, dst: &mut [f64]) {
    let n = src.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + src[i];
    }
    for i in 0..n {
        let lo = i.saturating_sub(r);
        let hi = (i + r + 1).min(n);
        dst[i] = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
    }
}

/// Log-sum-exp wirelength over all nets, with pin positions in site units.
/// When `grad` is given, accumulates d/dx and d/dy (site units) per cell.
pub(crate) fn lse_wirelength(
    netlist: &Netlist,
    placement: &Placement,
    gamma: f64,
    mut grad: Option<&mut [(f64, f64)]>,
) -> f64 {
    let mut total = 0.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut w = Vec::new();
    for net in &netlist.nets {
        if net.pins.len() < 2 {
            continue;
        }
        xs.clear();
        ys.clear();
        for p in &net.pins {
            let (x, y) = placement.pin_position(netlist, p);
            xs.push(x);
            ys.push(y);
        }
        for (axis, vals) in [(0usize, &xs), (1usize, &ys)] {
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let sp: f64 = vals.iter().map(|v| ((v - max) / gamma).exp()).sum();
            let sn: f64 = vals.iter().map(|v| ((min - v) / gamma).exp()).sum();
            total += max + gamma * sp.ln() - (min - gamma * sn.ln());
            if let Some(g) = grad.as_deref_mut() {
                w.clear();
                w.extend(vals.iter().map(|v| ((v - max) / gamma).exp() / sp - ((min - v) / gamma).exp() / sn));
                for (p, d) in net.pins.iter().zip(&w) {
                    if axis == 0 {
                        g[p.cell].0 += d;
                    } else {
                        g[p.cell].1 += d;
                    }
                }
            }
        }
    }
    total
}

/// Smoothed wirelength (temperature `config.smoothing`) plus
/// `config.lambda` times the squared bin overflow.
pub fn objective(netlist: &Netlist, placement: &Placement, config: &PlacerConfig) -> f64 {
    if netlist.cells.is_empty() {
        return 0.0;
    }
    let wl = lse_wirelength(netlist, placement, config.smoothing, None);
    if config.lambda == 0.0 || netlist.rows.is_empty() {
        return wl;
    }
    let mut grid = DensityGrid::new(netlist, placement, config.bin_size);
    grid.fill(netlist, placement);
    wl + config.lambda * grid.penalty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::fixtures::*;
    use crate::netlist::Netlist;
    use crate::place::hpwl;

    #[test]
    fn empty_netlist_is_zero() {
        let nl = Netlist::new(vec![], vec![], vec![], vec![], vec![]).unwrap();
        assert_eq!(objective(&nl, &Placement::new(vec![]), &PlacerConfig::default()), 0.0);
    }

    #[test]
    fn single_overfull_bin() {
        // Two 4-wide cells centered in the same 4x1 bin: occupancy 8, capacity 4.
        let cells = vec![std_cell(0, "a", 4), std_cell(1, "b", 4)];
        let nl = Netlist::new(cells, vec![], rows(2, 8, 1.0), vec![], vec![None; 2]).unwrap();
        let pl = Placement::new(vec![(0.0, 0.0), (0.0, 0.0)]);
        let base = PlacerConfig { lambda: 0.0, bin_size: 4, ..Default::default() };
        let with = PlacerConfig { lambda: 1.0, ..base.clone() };
        let delta = objective(&nl, &pl, &with) - objective(&nl, &pl, &base);
        assert!((delta - 16.0).abs() < 1e-12, "{delta}");
    }

    #[test]
    fn mass_is_conserved() {
        let (nl, _) = three_cell();
        let pl = Placement::new(vec![(0.3, 0.2), (9.0, 1.0), (4.7, 0.6)]);
        let mut g = DensityGrid::new(&nl, &pl, 3);
        g.fill(&nl, &pl);
        assert!((g.total_occupancy() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lse_gradient_matches_finite_difference() {
        let (nl, _) = three_cell();
        let pl = Placement::new(vec![(0.3, 0.2), (4.0, 1.0), (2.7, 0.6)]);
        let mut g = vec![(0.0, 0.0); 3];
        lse_wirelength(&nl, &pl, 0.7, Some(&mut g));
        let eps = 1e-6;
        for c in 0..3 {
            let mut p = pl.clone();
            p.pos[c].0 += eps;
            let up = lse_wirelength(&nl, &p, 0.7, None);
            p.pos[c].0 -= 2.0 * eps;
            let dn = lse_wirelength(&nl, &p, 0.7, None);
            assert!(((up - dn) / (2.0 * eps) - g[c].0).abs() < 1e-6);
        }
        assert!(lse_wirelength(&nl, &pl, 1e-3, None) - hpwl(&nl, &pl).unwrap() < 0.01);
    }
}
