//! Seeded synthetic designs with spatially local connectivity.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{Cell, CellKind, Net, Netlist, Pin, Placement, Region, RegionKind, Row};
use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::rng::rng;

/// Row height in site widths for synthetic designs.
pub const SYNTH_ROW_HEIGHT: f64 = 8.0;

/// (type prefix, width in sites, relative frequency)
const CELL_TYPES: &[(&str, u32, u32)] = &[
    ("inv", 1, 14),
    ("buf", 2, 8),
    ("nand2", 2, 16),
    ("nor2", 2, 12),
    ("aoi21", 3, 10),
    ("oai22", 4, 8),
    ("xor2", 3, 6),
    ("mux2", 4, 6),
    ("dff", 5, 10),
    ("fa", 6, 4),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Standard cells; macros come on top.
    pub num_cells: usize,
    pub num_nets: usize,
    pub util: f64,
    pub num_macros: usize,
    pub num_fences: usize,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(num_cells: usize, num_nets: usize, util: f64, num_macros: usize, num_fences: usize, seed: u64) -> Self {
        SynthParams { num_cells, num_nets, util, num_macros, num_fences, seed }
    }
}

fn pick_type(r: &mut crate::rng::Rng) -> (&'static str, u32) {
    let total: u32 = CELL_TYPES.iter().map(|t| t.2).sum();
    let mut k = r.random_range(0..total);
    for &(name, w, f) in CELL_TYPES {
        if k < f {
            return (name, w);
        }
        k -= f;
    }
    unreachable!()
}

fn net_degree(r: &mut crate::rng::Rng) -> usize {
    let u: f64 = r.random();
    match u {
        u if u < 0.60 => 2,
        u if u < 0.80 => 3,
        u if u < 0.95 => r.random_range(4..=6),
        _ => r.random_range(7..=12),
    }
}

/// Generates a connected synthetic design. Standard cells are one row tall;
/// macros are fixed blocks; each fence owns a contiguous cluster of cells.
pub fn synth_design(p: SynthParams) -> Result<(Netlist, Placement)> {
    if !(p.util > 0.0 && p.util <= 0.95) {
        return Err(Error::InfeasibleUtilization(format!("utilization {} outside (0, 0.95]", p.util)));
    }
    if p.num_cells < 10 {
        return Err(Error::InvalidArgument(format!("num_cells must be >= 10, got {}", p.num_cells)));
    }
    let mut r = rng(p.seed);
    let rh = SYNTH_ROW_HEIGHT;
    let n_std = p.num_cells;
    let mut cells = Vec::with_capacity(p.num_cells + p.num_macros);
    for i in 0..n_std {
        let (ty, w) = pick_type(&mut r);
        cells.push(Cell { id: i, name: format!("{ty}_{i}"), width: w, height: 1, kind: CellKind::Standard, movable: true });
    }
    let std_area: f64 = cells.iter().map(Cell::area).sum();
    // Each macro takes ~3% of the standard-cell area, as a physically square block.
    let macro_rows = ((0.03 * std_area / rh).sqrt().round() as u32).max(2);
    let macro_sites = (macro_rows as f64 * rh).round() as u32;
    for m in 0..p.num_macros {
        let id = cells.len();
        cells.push(Cell {
            id,
            name: format!("ram_{m}"),
            width: macro_sites,
            height: macro_rows,
            kind: CellKind::Macro,
            movable: false,
        });
    }

    let total_area: f64 = cells.iter().map(Cell::area).sum();
    let core_area = total_area / p.util;
    let num_rows = ((core_area / rh).sqrt().ceil() as i64).max(1);
    let sites = (core_area / num_rows as f64).round() as i64;
    let max_w = cells.iter().map(|c| c.width as i64).max().unwrap_or(1);
    let max_h = cells.iter().map(|c| c.height as i64).max().unwrap_or(1);
    if sites < max_w || num_rows < max_h {
        return Err(Error::InfeasibleUtilization("cells do not fit the core".into()));
    }
    let rows: Vec<Row> = (0..num_rows)
        .map(|y| Row { y, x_start: 0, num_sites: sites, site_width: 1.0, row_height: rh })
        .collect();
    let core = Rect::new(0.0, 0.0, sites as f64, num_rows as f64);

    // Macros on a non-overlapping spread, with a one-row halo.
    let mut pos = vec![(0.0, 0.0); cells.len()];
    let mut blocked: Vec<Rect> = Vec::new();
    for m in n_std..cells.len() {
        let (w, h) = (cells[m].width as f64, cells[m].height as f64);
        let mut placed = false;
        for _ in 0..1000 {
            let x = r.random_range(0..=(sites - w as i64)) as f64;
            let y = r.random_range(0..=(num_rows - h as i64)) as f64;
            let rect = Rect::new(x, y, x + w, y + h);
            let halo = Rect::new(x - rh, y - 1.0, x + w + rh, y + h + 1.0);
            if blocked.iter().all(|b| !b.intersects(&halo)) {
                pos[m] = (x, y);
                blocked.push(rect);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasibleUtilization("could not place macros".into()));
        }
    }

    // Latent positions in physical units drive net locality and fence clustering.
    let phys_w = sites as f64;
    let phys_h = num_rows as f64 * rh;
    let latent: Vec<(f64, f64)> = (0..n_std).map(|_| (r.random::<f64>() * phys_w, r.random::<f64>() * phys_h)).collect();

    // Fences: cluster of cells nearest a random latent center.
    let mut fences = Vec::new();
    let mut fence_of = vec![None; cells.len()];
    let members_per_fence = (n_std / 20).max(1);
    for f in 0..p.num_fences {
        let (cx, cy) = latent[r.random_range(0..n_std)];
        let mut order: Vec<usize> = (0..n_std).filter(|&c| fence_of[c].is_none()).collect();
        order.sort_by(|&a, &b| {
            let da = (latent[a].0 - cx).powi(2) + (latent[a].1 - cy).powi(2);
            let db = (latent[b].0 - cx).powi(2) + (latent[b].1 - cy).powi(2);
            da.total_cmp(&db).then(a.cmp(&b))
        });
        order.truncate(members_per_fence);
        let area: f64 = order.iter().map(|&c| cells[c].area()).sum();
        // Fence sized for ~65% fill, physically square.
        let fr = ((area / 0.65 / rh).sqrt().ceil()).max(1.0).min(num_rows as f64);
        let fw = (area / 0.65 / fr).ceil().min(sites as f64);
        let mut rect = None;
        for _ in 0..2000 {
            let x = r.random_range(0..=(sites - fw as i64)) as f64;
            let y = r.random_range(0..=(num_rows - fr as i64)) as f64;
            let cand = Rect::new(x, y, x + fw, y + fr);
            if blocked.iter().all(|b| !b.intersects(&cand)) {
                rect = Some(cand);
                break;
            }
        }
        let rect = rect.ok_or_else(|| Error::InfeasibleUtilization(format!("no room for fence {f}")))?;
        blocked.push(rect);
        for &c in &order {
            fence_of[c] = Some(f);
        }
        fences.push(Region::new(f, vec![rect], RegionKind::Fence)?);
    }

    // Spatial buckets over the latent plane for neighbor lookup.
    let bucket = (phys_w.max(phys_h) / (n_std as f64).sqrt()).max(1.0) * 2.0;
    let bx = (phys_w / bucket).ceil() as usize + 1;
    let by = (phys_h / bucket).ceil() as usize + 1;
    let mut grid = vec![Vec::new(); bx * by];
    for (c, &(x, y)) in latent.iter().enumerate() {
        grid[(y / bucket) as usize * bx + (x / bucket) as usize].push(c);
    }
    let nearby = |c: usize, k: usize, r: &mut crate::rng::Rng| -> Vec<usize> {
        let (x, y) = latent[c];
        let (gx, gy) = ((x / bucket) as i64, (y / bucket) as i64);
        let mut cand = Vec::new();
        let mut radius = 1i64;
        while cand.len() < k * 3 && radius < (bx.max(by) as i64 + 1) {
            cand.clear();
            for yy in (gy - radius).max(0)..=(gy + radius).min(by as i64 - 1) {
                for xx in (gx - radius).max(0)..=(gx + radius).min(bx as i64 - 1) {
                    cand.extend(grid[yy as usize * bx + xx as usize].iter().copied().filter(|&o| o != c));
                }
            }
            radius += 1;
        }
        cand.sort_unstable();
        cand.shuffle(r);
        cand.truncate(k);
        cand
    };

    let mut nets: Vec<Net> = Vec::with_capacity(p.num_nets);
    for i in 0..p.num_nets {
        let driver = r.random_range(0..n_std);
        let deg = net_degree(&mut r).min(n_std);
        let mut members = vec![driver];
        members.extend(nearby(driver, deg - 1, &mut r));
        // Occasionally tie a macro pin in.
        if p.num_macros > 0 && r.random::<f64>() < 0.02 {
            members.push(n_std + r.random_range(0..p.num_macros));
        }
        nets.push(Net {
            id: i,
            name: format!("net{i}"),
            pins: members.iter().map(|&c| Pin::at_center(c)).collect(),
            driver: Some(0),
        });
    }

    // Stitch components together so the design is connected.
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for n in &nets {
        let a = n.pins[0].cell;
        for p in &n.pins[1..] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, p.cell));
            if ra != rb {
                parent[rb] = ra;
            }
        }
    }
    let root = find(&mut parent, 0);
    for c in 1..cells.len() {
        let rc = find(&mut parent, c);
        if rc != root {
            let target = if nets.is_empty() { None } else { Some(r.random_range(0..nets.len())) };
            match target {
                Some(t) if nets[t].pins.iter().any(|p| find(&mut parent, p.cell) == root) => {
                    nets[t].pins.push(Pin::at_center(c));
                }
                _ => {
                    let id = nets.len();
                    nets.push(Net { id, name: format!("net{id}"), pins: vec![Pin::at_center(0), Pin::at_center(c)], driver: Some(0) });
                }
            }
            let rc = find(&mut parent, c);
            let root_now = find(&mut parent, 0);
            parent[rc] = root_now;
        }
    }

    // Initial placement: uniform within rows; fence members within their fence.
    for c in 0..n_std {
        let w = cells[c].width as i64;
        let area = match fence_of[c] {
            Some(f) => fences[f].rects[0],
            None => core,
        };
        let x = r.random_range(area.x0 as i64..=(area.x1 as i64 - w).max(area.x0 as i64));
        let y = r.random_range(area.y0 as i64..area.y1 as i64);
        pos[c] = (x as f64, y as f64);
    }

    let nl = Netlist::new(cells, nets, rows, fences, fence_of)?;
    Ok((nl, Placement::new(pos)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn connected(nl: &Netlist) -> bool {
        let n = nl.cells.len();
        let mut adj = vec![Vec::new(); n];
        for net in &nl.nets {
            for w in net.pins.windows(2) {
                adj[w[0].cell].push(w[1].cell);
                adj[w[1].cell].push(w[0].cell);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    #[test]
    fn deterministic_for_seed() {
        let p = SynthParams::new(1000, 1100, 0.6, 2, 1, 7);
        let a = synth_design(p).unwrap();
        let b = synth_design(p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn over_utilized_is_rejected() {
        let err = synth_design(SynthParams::new(10, 12, 0.99, 0, 0, 3)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleUtilization(_)));
    }

    #[test]
    fn utilization_by_area_sum() {
        let (nl, _) = synth_design(SynthParams::new(2000, 2200, 0.7, 4, 2, 1)).unwrap();
        let util = nl.total_cell_area() / nl.core_area();
        assert!((0.68..=0.72).contains(&util), "util {util}");
        assert_eq!(nl.cells.len(), 2004);
        assert_eq!(nl.placeable_cells().count(), 2000);
        assert!(nl.nets.len() >= 2200);
        assert!(connected(&nl));
    }

    #[test]
    fn fence_members_start_inside() {
        let (nl, pl) = synth_design(SynthParams::new(500, 550, 0.6, 1, 2, 4)).unwrap();
        for f in &nl.fences {
            for c in nl.fence_members(f.id) {
                assert!(f.contains_rect(&pl.footprint(&nl, c)));
            }
        }
    }
}
