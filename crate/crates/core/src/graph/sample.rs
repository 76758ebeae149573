//! Grid subsampling of candidate watermark centers.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::netlist::{CellId, Netlist, Placement};
use crate::rng::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub x0: f64,
    pub y0: f64,
    /// Tile width in sites.
    pub tile_w: f64,
    /// Tile height in rows.
    pub tile_h: f64,
    pub nx: usize,
    pub ny: usize,
    /// One sampled cell per non-empty tile, in tile order.
    pub cells: Vec<CellId>,
    pub seed: u64,
}

impl GridSample {
    /// Tile holding a point given in (site, row) units.
    pub fn tile_of(&self, x: f64, y: f64) -> (usize, usize) {
        let tx = ((x - self.x0) / self.tile_w).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let ty = ((y - self.y0) / self.tile_h).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (tx, ty)
    }
}

fn center(netlist: &Netlist, placement: &Placement, c: CellId) -> (f64, f64) {
    let (x, y) = placement.get(c);
    let cell = &netlist.cells[c];
    (x + 0.5 * cell.width as f64, y + 0.5 * cell.height as f64)
}

/// Tiles the core with `region_size` = (sites, rows) tiles and draws one
/// movable standard cell outside fences uniformly from every non-empty tile,
/// bucketing cells by their center.
pub fn grid_sample(netlist: &Netlist, placement: &Placement, region_size: (f64, f64), seed: u64) -> Result<GridSample> {
    let (tw, th) = region_size;
    if !(tw > 0.0 && th > 0.0) {
        return Err(Error::InvalidArgument("region size must be positive".into()));
    }
    let core = netlist.core();
    if tw > core.width() + 1e-9 || th > core.height() + 1e-9 {
        return Err(Error::InvalidArgument("region size exceeds the core".into()));
    }
    let nx = ((core.width() / tw).ceil() as usize).max(1);
    let ny = ((core.height() / th).ceil() as usize).max(1);
    let mut g = GridSample { x0: core.x0, y0: core.y0, tile_w: tw, tile_h: th, nx, ny, cells: Vec::new(), seed };

    let mut tiles: Vec<Vec<CellId>> = vec![Vec::new(); nx * ny];
    for c in netlist.placeable_cells().map(|c| c.id).filter(|&c| netlist.fence_of[c].is_none()) {
        let (cx, cy) = center(netlist, placement, c);
        let (tx, ty) = g.tile_of(cx, cy);
        tiles[ty * nx + tx].push(c);
    }
    let mut r = rng(seed);
    for t in tiles.iter().filter(|t| !t.is_empty()) {
        g.cells.push(t[r.random_range(0..t.len())]);
    }
    Ok(g)
}
