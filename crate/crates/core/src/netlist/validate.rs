use super::{CellId, FenceId, Netlist, Placement};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Cells whose footprint leaves the row area.
    pub out_of_core: Vec<CellId>,
    /// (cell, fence): member outside its own fence, or non-member overlapping a fence.
    pub fence_violations: Vec<(CellId, FenceId)>,
    /// Overlapping pairs, `a < b`, sorted.
    pub overlaps: Vec<(CellId, CellId)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.out_of_core.is_empty() && self.fence_violations.is_empty() && self.overlaps.is_empty()
    }

    pub fn num_violations(&self) -> usize {
        self.out_of_core.len() + self.fence_violations.len() + self.overlaps.len()
    }
}

fn inside_rows(netlist: &Netlist, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let mut y = y0.floor() as i64;
    let end = y1.ceil() as i64;
    if end <= y {
        return false;
    }
    while y < end {
        match netlist.row_at(y) {
            Some(r) if x0 >= r.x_start as f64 && x1 <= (r.x_start + r.num_sites) as f64 => {}
            _ => return false,
        }
        y += 1;
    }
    true
}

/// Reports core containment, fence membership and pairwise overlaps.
/// Overlaps are found with an x-sorted sweep; touching edges do not count.
pub fn validate(netlist: &Netlist, placement: &Placement) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = netlist.cells.len().min(placement.len());
    let rects: Vec<_> = (0..n).map(|c| placement.footprint(netlist, c)).collect();

    for (c, r) in rects.iter().enumerate() {
        if !inside_rows(netlist, r.x0, r.y0, r.x1, r.y1) {
            report.out_of_core.push(c);
        }
        for f in &netlist.fences {
            let member = netlist.fence_of[c] == Some(f.id);
            let bad = if member { !f.contains_rect(r) } else { f.intersects(r) };
            if bad {
                report.fence_violations.push((c, f.id));
            }
        }
    }

    let mut order: Vec<CellId> = (0..n).collect();
    order.sort_by(|&a, &b| rects[a].x0.total_cmp(&rects[b].x0).then(a.cmp(&b)));
    let mut active: Vec<CellId> = Vec::new();
    for &c in &order {
        let r = rects[c];
        active.retain(|&a| rects[a].x1 > r.x0);
        for &a in &active {
            if rects[a].intersects(&r) {
                report.overlaps.push((a.min(c), a.max(c)));
            }
        }
        active.push(c);
    }
    report.overlaps.sort_unstable();
    report
}
