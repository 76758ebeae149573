use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::netlist::{CellId, Netlist, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    /// Members must lie inside; every other cell must stay out.
    MembersInsideOthersOutside,
    MembersInsideOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionConstraint {
    pub region: Region,
    /// Sorted, deduplicated.
    pub members: Vec<CellId>,
    pub polarity: Polarity,
}

/// Hard containment constraints honored by every placement stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionConstraintSet {
    entries: Vec<RegionConstraint>,
    member_of: Vec<Option<usize>>,
}

impl RegionConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// One exclusive entry per declared fence.
    pub fn from_fences(netlist: &Netlist) -> Self {
        let mut set = Self::new();
        for f in &netlist.fences {
            set.push(netlist, f.clone(), netlist.fence_members(f.id), Polarity::MembersInsideOthersOutside)
                .expect("fence memberships are disjoint by construction");
        }
        set
    }

    pub fn push(&mut self, netlist: &Netlist, region: Region, members: Vec<CellId>, polarity: Polarity) -> Result<()> {
        let mut members = members;
        members.sort_unstable();
        members.dedup();
        if self.member_of.len() < netlist.cells.len() {
            self.member_of.resize(netlist.cells.len(), None);
        }
        for &m in &members {
            if m >= netlist.cells.len() {
                return Err(Error::UnknownCell(m.to_string()));
            }
            if let Some(e) = self.member_of[m] {
                return Err(Error::InvalidArgument(format!(
                    "cell `{}` already constrained by region entry {e}",
                    netlist.cells[m].name
                )));
            }
        }
        let idx = self.entries.len();
        for &m in &members {
            self.member_of[m] = Some(idx);
        }
        self.entries.push(RegionConstraint { region, members, polarity });
        Ok(())
    }

    pub fn entries(&self) -> &[RegionConstraint] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_of(&self, cell: CellId) -> Option<usize> {
        self.member_of.get(cell).copied().flatten()
    }

    pub fn is_constrained(&self, cell: CellId) -> bool {
        self.entry_of(cell).is_some()
    }

    /// Whether a cell may occupy `rect`.
    pub fn allows(&self, cell: CellId, rect: &Rect) -> bool {
        let own = self.entry_of(cell);
        for (i, e) in self.entries.iter().enumerate() {
            if Some(i) == own {
                if !e.region.contains_rect(rect) {
                    return false;
                }
            } else if e.polarity == Polarity::MembersInsideOthersOutside && e.region.intersects(rect) {
                return false;
            }
        }
        true
    }

    /// Moves a `w`×`h` box at (x, y) to the nearest position satisfying its
    /// constraints (members into their region, non-members out of exclusive ones).
    pub fn project(&self, cell: CellId, x: f64, y: f64, w: f64, h: f64, rh: f64) -> (f64, f64) {
        let own = self.entry_of(cell);
        let (mut x, mut y) = (x, y);
        if let Some(e) = own {
            let mut best = (f64::INFINITY, x, y);
            for r in &self.entries[e].region.rects {
                let px = x.clamp(r.x0, (r.x1 - w).max(r.x0));
                let py = y.clamp(r.y0, (r.y1 - h).max(r.y0));
                let d = (px - x).abs() + (py - y).abs() * rh;
                if d < best.0 {
                    best = (d, px, py);
                }
            }
            x = best.1;
            y = best.2;
        }
        // A few rounds handle a box pushed from one exclusive region into another.
        for _ in 0..4 {
            let mut moved = false;
            for (i, e) in self.entries.iter().enumerate() {
                if Some(i) == own || e.polarity != Polarity::MembersInsideOthersOutside {
                    continue;
                }
                for r in &e.region.rects {
                    let b = Rect::new(x, y, x + w, y + h);
                    if !r.intersects(&b) {
                        continue;
                    }
                    let options = [
                        ((x + w - r.x0).abs(), r.x0 - w, y),
                        ((r.x1 - x).abs(), r.x1, y),
                        (((y + h - r.y0) * rh).abs(), x, r.y0 - h),
                        (((r.y1 - y) * rh).abs(), x, r.y1),
                    ];
                    let best = options.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
                    x = best.1;
                    y = best.2;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        (x, y)
    }

    /// Fails when some region cannot hold its members' area. Area shared with
    /// another region that keeps outsiders out does not count.
    pub fn check_capacity(&self, netlist: &Netlist) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            let need: f64 = e.members.iter().map(|&m| netlist.cells[m].area()).sum();
            let blocked: f64 = self
                .entries
                .iter()
                .enumerate()
                .filter(|&(j, o)| j != i && o.polarity == Polarity::MembersInsideOthersOutside)
                .flat_map(|(_, o)| o.region.rects.iter())
                .flat_map(|q| e.region.rects.iter().map(move |r| r.overlap_area(q)))
                .sum();
            let have = e.region.area() - blocked;
            if need > have {
                return Err(Error::InfeasibleRegion(format!(
                    "region entry {i} holds {have} site-rows but its members need {need}"
                )));
            }
            let widest = e.members.iter().map(|&m| netlist.cells[m].width as f64).fold(0.0, f64::max);
            if !e.region.rects.iter().any(|r| r.width() >= widest) {
                return Err(Error::InfeasibleRegion(format!("region entry {i} is narrower than a member cell")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::fixtures::*;
    use crate::netlist::{Netlist, RegionKind};

    fn setup() -> (Netlist, RegionConstraintSet) {
        let cells = (0..4).map(|i| std_cell(i, &format!("c{i}"), 2)).collect();
        let nl = Netlist::new(cells, vec![], rows(6, 20, 2.0), vec![], vec![None; 4]).unwrap();
        let region = Region::new(0, vec![Rect::new(5.0, 2.0, 10.0, 4.0)], RegionKind::Watermark).unwrap();
        let mut set = RegionConstraintSet::new();
        set.push(&nl, region, vec![0, 1], Polarity::MembersInsideOthersOutside).unwrap();
        (nl, set)
    }

    #[test]
    fn allows_respects_polarity() {
        let (_, set) = setup();
        assert!(set.allows(0, &Rect::new(5.0, 2.0, 7.0, 3.0)));
        assert!(!set.allows(0, &Rect::new(9.0, 2.0, 11.0, 3.0)));
        assert!(!set.allows(2, &Rect::new(9.0, 2.0, 11.0, 3.0)));
        assert!(set.allows(2, &Rect::new(10.0, 2.0, 12.0, 3.0)));
    }

    #[test]
    fn projection_moves_members_in_and_others_out() {
        let (_, set) = setup();
        let (x, y) = set.project(0, 0.0, 0.0, 2.0, 1.0, 2.0);
        assert!(set.allows(0, &Rect::new(x, y, x + 2.0, y + 1.0)));
        let (x, y) = set.project(2, 7.0, 2.5, 2.0, 1.0, 2.0);
        assert!(set.allows(2, &Rect::new(x, y, x + 2.0, y + 1.0)), "{x} {y}");
    }

    #[test]
    fn overlapping_membership_rejected() {
        let (nl, mut set) = setup();
        let region = Region::new(1, vec![Rect::new(0.0, 0.0, 4.0, 1.0)], RegionKind::Fence).unwrap();
        assert!(set.push(&nl, region, vec![1, 2], Polarity::MembersInsideOnly).is_err());
    }

    #[test]
    fn capacity_check() {
        let (nl, _) = setup();
        let tiny = Region::new(0, vec![Rect::new(0.0, 0.0, 3.0, 1.0)], RegionKind::Watermark).unwrap();
        let mut set = RegionConstraintSet::new();
        set.push(&nl, tiny, vec![0, 1], Polarity::MembersInsideOthersOutside).unwrap();
        assert!(matches!(set.check_capacity(&nl), Err(Error::InfeasibleRegion(_))));
    }

    #[test]
    fn capacity_excludes_exclusive_overlap() {
        let (nl, mut set) = setup();
        // Fence of 6 site-rows, 3 of them under the exclusive region; two 2-wide members do not fit.
        let fence = Region::new(1, vec![Rect::new(7.0, 3.0, 13.0, 4.0)], RegionKind::Fence).unwrap();
        set.push(&nl, fence, vec![2, 3], Polarity::MembersInsideOnly).unwrap();
        assert!(matches!(set.check_capacity(&nl), Err(Error::InfeasibleRegion(_))));
    }
}
