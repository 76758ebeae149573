//! Design description: cells, nets, rows, fences; plus placements and their
//! Bookshelf-style text serialization.

mod bookshelf;
mod synth;
mod validate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Rect;

pub use bookshelf::{parse_bookshelf, write_bookshelf, write_placement, BOOKSHELF_NOTE};
pub use synth::{synth_design, SynthParams};
pub use validate::{validate, ValidationReport};

pub type CellId = usize;
pub type NetId = usize;
pub type FenceId = usize;

/// Reserved name prefix for buffer cells added by the buffer-insertion baseline.
pub const BUFFER_PREFIX: &str = "WMBUF_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Standard,
    Macro,
    /// Stand-in for a collapsed fence; only appears in derived graphs.
    FencePseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub name: String,
    /// Width in sites.
    pub width: u32,
    /// Height in rows.
    pub height: u32,
    pub kind: CellKind,
    pub movable: bool,
}

impl Cell {
    /// Cells the placement engine is allowed to move. Macros always stay put.
    pub fn is_placeable(&self) -> bool {
        self.movable && self.kind == CellKind::Standard
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    pub fn footprint(&self, x: f64, y: f64) -> Rect {
        Rect::new(x, y, x + self.width as f64, y + self.height as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pin {
    pub cell: CellId,
    /// Offset from the cell center, in sites.
    pub dx: f64,
    /// Offset from the cell center, in rows.
    pub dy: f64,
}

impl Pin {
    pub fn at_center(cell: CellId) -> Self {
        Pin { cell, dx: 0.0, dy: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub id: NetId,
    pub name: String,
    pub pins: Vec<Pin>,
    pub driver: Option<usize>,
}

impl Net {
    /// Index of the driving pin; nets without a declared driver use pin 0.
    pub fn driver_index(&self) -> usize {
        self.driver.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    /// Row index (y coordinate in row units).
    pub y: i64,
    pub x_start: i64,
    pub num_sites: i64,
    pub site_width: f64,
    pub row_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    Fence,
    Watermark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub rects: Vec<Rect>,
    pub kind: RegionKind,
}

impl Region {
    pub fn new(id: usize, rects: Vec<Rect>, kind: RegionKind) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::InvalidDesign(format!("region {id} has no rects")));
        }
        if rects.iter().any(|r| !(r.area() > 0.0)) {
            return Err(Error::InvalidDesign(format!("region {id} has a degenerate rect")));
        }
        Ok(Region { id, rects, kind })
    }

    pub fn area(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.rects.iter().any(|q| q.contains_rect(r))
    }

    pub fn intersects(&self, r: &Rect) -> bool {
        self.rects.iter().any(|q| q.intersects(r))
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.rects.iter().any(|q| q.contains_point(x, y))
    }

    pub fn bbox(&self) -> Rect {
        let mut b = self.rects[0];
        for r in &self.rects[1..] {
            b.x0 = b.x0.min(r.x0);
            b.y0 = b.y0.min(r.y0);
            b.x1 = b.x1.max(r.x1);
            b.y1 = b.y1.max(r.y1);
        }
        b
    }
}

/// Immutable design description.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub cells: Vec<Cell>,
    pub nets: Vec<Net>,
    pub rows: Vec<Row>,
    pub fences: Vec<Region>,
    /// `fence_of[cell]` is the fence the cell belongs to, if any.
    pub fence_of: Vec<Option<FenceId>>,
    name_index: HashMap<String, CellId>,
    cell_nets: Vec<Vec<NetId>>,
}

impl Netlist {
    pub fn new(
        cells: Vec<Cell>,
        nets: Vec<Net>,
        rows: Vec<Row>,
        fences: Vec<Region>,
        fence_of: Vec<Option<FenceId>>,
    ) -> Result<Self> {
        if fence_of.len() != cells.len() {
            return Err(Error::InvalidDesign("fence membership length mismatch".into()));
        }
        let mut name_index = HashMap::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            if c.id != i {
                return Err(Error::InvalidDesign(format!("cell `{}` has id {} at index {i}", c.name, c.id)));
            }
            if c.width == 0 || c.height == 0 {
                return Err(Error::InvalidDesign(format!("cell `{}` has zero size", c.name)));
            }
            if name_index.insert(c.name.clone(), i).is_some() {
                return Err(Error::DuplicateCell(c.name.clone()));
            }
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.row_height != first.row_height || r.site_width != first.site_width) {
                return Err(Error::InvalidDesign("rows must share height and site width".into()));
            }
        }
        let mut cell_nets = vec![Vec::new(); cells.len()];
        for (i, n) in nets.iter().enumerate() {
            if n.id != i {
                return Err(Error::InvalidDesign(format!("net {} has id {} at index {i}", n.name, n.id)));
            }
            if n.pins.is_empty() {
                return Err(Error::InvalidDesign(format!("net {} has no pins", n.name)));
            }
            if let Some(d) = n.driver {
                if d >= n.pins.len() {
                    return Err(Error::InvalidDesign(format!("net {} driver out of range", n.name)));
                }
            }
            for p in &n.pins {
                let Some(list) = cell_nets.get_mut(p.cell) else {
                    return Err(Error::DanglingPin { net: n.name.clone(), cell: p.cell.to_string() });
                };
                if list.last() != Some(&i) {
                    list.push(i);
                }
            }
        }
        for (c, f) in fence_of.iter().enumerate() {
            if let Some(f) = f {
                if *f >= fences.len() {
                    return Err(Error::InvalidDesign(format!(
                        "cell `{}` references missing fence {f}",
                        cells[c].name
                    )));
                }
            }
        }
        for (i, f) in fences.iter().enumerate() {
            if f.id != i {
                return Err(Error::InvalidDesign(format!("fence id {} at index {i}", f.id)));
            }
        }
        Ok(Netlist { cells, nets, rows, fences, fence_of, name_index, cell_nets })
    }

    pub fn cell_by_name(&self, name: &str) -> Option<CellId> {
        self.name_index.get(name).copied()
    }

    pub fn nets_of(&self, cell: CellId) -> &[NetId] {
        &self.cell_nets[cell]
    }

    /// Row height expressed in site widths; converts row units to site units.
    pub fn row_height(&self) -> f64 {
        self.rows.first().map(|r| r.row_height / r.site_width).unwrap_or(1.0)
    }

    pub fn num_rows(&self) -> i64 {
        self.rows.len() as i64
    }

    /// Bounding box of all rows.
    pub fn core(&self) -> Rect {
        if self.rows.is_empty() {
            return Rect::new(0.0, 0.0, 0.0, 0.0);
        }
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for row in &self.rows {
            r.x0 = r.x0.min(row.x_start as f64);
            r.x1 = r.x1.max((row.x_start + row.num_sites) as f64);
            r.y0 = r.y0.min(row.y as f64);
            r.y1 = r.y1.max(row.y as f64 + 1.0);
        }
        r
    }

    pub fn row_at(&self, y: i64) -> Option<&Row> {
        self.rows.iter().find(|r| r.y == y)
    }

    pub fn fence_members(&self, fence: FenceId) -> Vec<CellId> {
        (0..self.cells.len()).filter(|&c| self.fence_of[c] == Some(fence)).collect()
    }

    pub fn placeable_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_placeable())
    }

    pub fn total_cell_area(&self) -> f64 {
        self.cells.iter().map(Cell::area).sum()
    }

    pub fn core_area(&self) -> f64 {
        self.rows.iter().map(|r| r.num_sites as f64).sum()
    }

    /// Adds cells and nets, rebuilding the lookup tables. Used by netlist-editing baselines.
    pub fn with_edits(&self, new_cells: Vec<Cell>, nets: Vec<Net>) -> Result<Netlist> {
        let mut cells = self.cells.clone();
        let mut fence_of = self.fence_of.clone();
        for c in new_cells {
            cells.push(c);
            fence_of.push(None);
        }
        Netlist::new(cells, nets, self.rows.clone(), self.fences.clone(), fence_of)
    }
}

/// Cell positions: lower-left corner, x in sites and y in rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub pos: Vec<(f64, f64)>,
}

impl Placement {
    pub fn new(pos: Vec<(f64, f64)>) -> Self {
        Placement { pos }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn get(&self, cell: CellId) -> (f64, f64) {
        self.pos[cell]
    }

    pub fn set(&mut self, cell: CellId, x: f64, y: f64) {
        self.pos[cell] = (x, y);
    }

    /// Absolute pin position in site units (y scaled by the row height).
    pub fn pin_position(&self, netlist: &Netlist, pin: &Pin) -> (f64, f64) {
        let c = &netlist.cells[pin.cell];
        let (x, y) = self.pos[pin.cell];
        let rh = netlist.row_height();
        (
            x + 0.5 * c.width as f64 + pin.dx,
            (y + 0.5 * c.height as f64 + pin.dy) * rh,
        )
    }

    pub fn footprint(&self, netlist: &Netlist, cell: CellId) -> Rect {
        let (x, y) = self.pos[cell];
        netlist.cells[cell].footprint(x, y)
    }

    pub fn is_finite(&self) -> bool {
        self.pos.iter().all(|(x, y)| x.is_finite() && y.is_finite())
    }
}
