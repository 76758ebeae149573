use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::netlist::{Netlist, Placement};

#[derive(Debug, Clone, PartialEq)]
pub struct IcmarksScore {
    pub rect: Rect,
    /// Movable cells outside fences with their origin in the window.
    pub cell_count: usize,
    pub member_area: f64,
    /// Area of movable cells cut by the window boundary.
    pub boundary_area: f64,
    pub score: f64,
    pub feasible: bool,
}

/// Scores every window of `size` (sites, rows) at a stride of one row
/// height in both directions, scanning rows bottom up.
pub fn icmarks_scores(netlist: &Netlist, placement: &Placement, size: (f64, f64), sig_len: usize) -> Result<Vec<IcmarksScore>> {
    let core = netlist.core();
    let (w, h) = size;
    if !(w > 0.0 && h > 0.0) || w > core.width() || h > core.height() {
        return Err(Error::InvalidArgument(format!("window {w}x{h} does not fit the core")));
    }
    let sx = netlist.row_height().round().max(1.0);
    let blocks: Vec<Rect> = netlist
        .cells
        .iter()
        .filter(|c| !c.is_placeable())
        .map(|c| placement.footprint(netlist, c.id))
        .chain(netlist.fences.iter().flat_map(|f| f.rects.iter().copied()))
        .collect();
    let cells: Vec<(Rect, f64, bool)> = netlist
        .placeable_cells()
        .map(|c| (placement.footprint(netlist, c.id), c.area(), netlist.fence_of[c.id].is_none()))
        .collect();
    let mut out = Vec::new();
    let mut y0 = core.y0;
    while y0 + h <= core.y1 {
        let mut x0 = core.x0;
        while x0 + w <= core.x1 {
            let rect = Rect::new(x0, y0, x0 + w, y0 + h);
            let (mut count, mut member_area, mut boundary_area) = (0, 0.0, 0.0);
            for (fp, area, free) in &cells {
                if !rect.intersects(fp) {
                    continue;
                }
                if *free && rect.contains_point(fp.x0, fp.y0) {
                    count += 1;
                    member_area += area;
                }
                if !rect.contains_rect(fp) {
                    boundary_area += area;
                }
            }
            let blocked = blocks.iter().any(|b| b.intersects(&rect));
            let wa = rect.area();
            out.push(IcmarksScore {
                rect,
                cell_count: count,
                member_area,
                boundary_area,
                score: member_area / wa + boundary_area / wa,
                feasible: !blocked && count >= sig_len,
            });
            x0 += sx;
        }
        y0 += 1.0;
    }
    Ok(out)
}

/// Feasible windows by ascending score; ties go to the lower row, then lower x.
pub fn icmarks_search(netlist: &Netlist, placement: &Placement, size: (f64, f64), sig_len: usize) -> Result<Vec<IcmarksScore>> {
    let mut v: Vec<IcmarksScore> = icmarks_scores(netlist, placement, size, sig_len)?.into_iter().filter(|s| s.feasible).collect();
    if v.is_empty() {
        return Err(Error::Empty("no feasible window".into()));
    }
    v.sort_by(|a, b| {
        a.score.total_cmp(&b.score).then(a.rect.y0.total_cmp(&b.rect.y0)).then(a.rect.x0.total_cmp(&b.rect.x0))
    });
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::fixtures::*;
    use crate::netlist::{synth_design, Cell, CellKind, SynthParams};
    use crate::place::{place_flow, PlacerConfig, RegionConstraintSet};

    #[test]
    fn empty_window_beside_straddlers_ranks_first() {
        // 1-row design, windows 4 sites wide at stride 1.
        let cells = (0..4).map(|i| std_cell(i, &format!("c{i}"), 2)).collect();
        let nl = Netlist::new(cells, vec![], rows(1, 16, 1.0), vec![], vec![None; 4]).unwrap();
        let pl = Placement::new(vec![(5.0, 0.0), (7.0, 0.0), (10.0, 0.0), (13.0, 0.0)]);
        let ranked = icmarks_search(&nl, &pl, (4.0, 1.0), 0).unwrap();
        let best = &ranked[0];
        assert_eq!(best.score, 0.0);
        assert_eq!(best.rect.x0, 0.0);
        assert!(ranked.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn macro_overlap_and_small_count_excluded() {
        let mut cells: Vec<Cell> = (0..3).map(|i| std_cell(i, &format!("c{i}"), 1)).collect();
        cells.push(Cell { id: 3, name: "m".into(), width: 4, height: 2, kind: CellKind::Macro, movable: false });
        let nl = Netlist::new(cells, vec![], rows(2, 12, 1.0), vec![], vec![None; 4]).unwrap();
        let pl = Placement::new(vec![(5.0, 0.0), (6.0, 0.0), (9.0, 1.0), (0.0, 0.0)]);
        let all = icmarks_scores(&nl, &pl, (4.0, 2.0), 2).unwrap();
        for s in &all {
            if s.rect.x0 < 4.0 {
                assert!(!s.feasible);
            }
            if s.cell_count < 2 {
                assert!(!s.feasible);
            }
        }
        let ranked = icmarks_search(&nl, &pl, (4.0, 2.0), 2).unwrap();
        assert!(ranked.iter().all(|s| s.rect.x0 >= 4.0 && s.cell_count >= 2));
        assert!(icmarks_search(&nl, &pl, (4.0, 2.0), 5).is_err());
    }

    #[test]
    fn ordering_matches_brute_force() {
        let (nl, init) = synth_design(SynthParams::new(500, 550, 0.6, 1, 1, 3)).unwrap();
        let pl = place_flow(&nl, &init, &RegionConstraintSet::from_fences(&nl), &PlacerConfig::default()).unwrap();
        let size = (40.0, 5.0);
        let ranked = icmarks_search(&nl, &pl, size, 5).unwrap();
        // Rescore each window from scratch.
        for s in &ranked {
            let r = s.rect;
            let mut ma = 0.0;
            let mut ba = 0.0;
            for c in nl.placeable_cells() {
                let fp = pl.footprint(&nl, c.id);
                let (x, y) = pl.get(c.id);
                if nl.fence_of[c.id].is_none() && x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1 {
                    ma += c.area();
                }
                if fp.overlap_area(&r) > 0.0 && !(fp.x0 >= r.x0 && fp.x1 <= r.x1 && fp.y0 >= r.y0 && fp.y1 <= r.y1) {
                    ba += c.area();
                }
            }
            assert_eq!(s.score, ma / r.area() + ba / r.area());
        }
        let mut again = ranked.clone();
        again.sort_by(|a, b| (a.score, a.rect.y0, a.rect.x0).partial_cmp(&(b.score, b.rect.y0, b.rect.x0)).unwrap());
        assert_eq!(again, ranked);
    }
}
