//! Region watermarks: label collection for training, model-guided search
//! for the center cell, insertion as an extra exclusive region constraint,
//! and extraction by counting members found inside the region.

mod labels;
mod search;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::netlist::{CellId, Netlist, Placement, Region, RegionKind};
use crate::place::{hpwl, place_flow, PlacerConfig, Polarity, RegionConstraintSet};

pub use labels::{collect_labels, LabelEntry, LabelSet};
pub use search::{post_aggregate, search, SearchResult};

/// Default region size in rows.
pub const DEFAULT_REGION_ROWS: u32 = 10;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_GAMMA: f64 = 0.2;
pub const DEFAULT_AGG_HOPS: usize = 2;

/// Maps a wirelength ratio to a degradation label: 0 below 1, 1 above
/// `1 + beta`, linear in between.
pub fn transform_label(raw: f64, beta: f64) -> f64 {
    if raw < 1.0 {
        0.0
    } else if raw > 1.0 + beta {
        1.0
    } else {
        // Rounding can carry (1 + beta - 1) / beta one ulp past 1.
        ((raw - 1.0) / beta).min(1.0)
    }
}

/// Region size in (sites, rows) for an `n`-row region: physically square.
pub fn region_size(netlist: &Netlist, n: u32) -> (f64, f64) {
    ((n as f64 * netlist.row_height()).round().max(1.0), n as f64)
}

/// An `n`-row region centered on the center of `cell`, snapped to whole
/// sites and rows and shifted inward when it would leave the core.
pub fn region_rect(netlist: &Netlist, placement: &Placement, cell: CellId, n: u32) -> Result<Rect> {
    let (w, h) = region_size(netlist, n);
    let core = netlist.core();
    if w > core.width() || h > core.height() {
        return Err(Error::InfeasibleRegion(format!("{w}x{h} region does not fit the core")));
    }
    let c = &netlist.cells[cell];
    let (x, y) = placement.get(cell);
    let cx = x + 0.5 * c.width as f64;
    let cy = y + 0.5 * c.height as f64;
    let x0 = (cx - 0.5 * w).round().clamp(core.x0, core.x1 - w);
    let y0 = (cy - 0.5 * h).round().clamp(core.y0, core.y1 - h);
    Ok(Rect::new(x0, y0, x0 + w, y0 + h))
}

/// Placeable cells outside fences whose lower-left corner lies in `rect`
/// (half-open), sorted by id.
pub fn cells_in(netlist: &Netlist, placement: &Placement, rect: &Rect) -> Vec<CellId> {
    netlist
        .placeable_cells()
        .filter(|c| netlist.fence_of[c.id].is_none())
        .filter(|c| {
            let (x, y) = placement.get(c.id);
            rect.contains_point(x, y)
        })
        .map(|c| c.id)
        .collect()
}

/// The confidential signature: center cell, region and member cells, by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatermarkSecret {
    pub center: String,
    pub region: Rect,
    pub members: Vec<String>,
    pub n: u32,
    pub seed: u64,
}

impl WatermarkSecret {
    /// Builds the region around `center` and captures the cells currently inside it.
    pub fn capture(netlist: &Netlist, placement: &Placement, center: CellId, n: u32, seed: u64) -> Result<Self> {
        let region = region_rect(netlist, placement, center, n)?;
        let ids = cells_in(netlist, placement, &region);
        if ids.is_empty() {
            return Err(Error::Empty("watermark region holds no movable cells".into()));
        }
        Ok(WatermarkSecret {
            center: netlist.cells[center].name.clone(),
            region,
            members: ids.iter().map(|&c| netlist.cells[c].name.clone()).collect(),
            n,
            seed,
        })
    }

    /// Captures the cells of an externally chosen region. The member nearest
    /// the region center (lowest id on ties) is recorded as the center.
    pub fn for_region(netlist: &Netlist, placement: &Placement, region: Rect, n: u32, seed: u64) -> Result<Self> {
        let ids = cells_in(netlist, placement, &region);
        let (rx, ry) = region.center();
        let dist = |c: CellId| {
            let (x, y) = placement.get(c);
            let cell = &netlist.cells[c];
            (x + 0.5 * cell.width as f64 - rx).abs() + (y + 0.5 * cell.height as f64 - ry).abs() * netlist.row_height()
        };
        let center = ids
            .iter()
            .copied()
            .min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)))
            .ok_or_else(|| Error::Empty("watermark region holds no movable cells".into()))?;
        Ok(WatermarkSecret {
            center: netlist.cells[center].name.clone(),
            region,
            members: ids.iter().map(|&c| netlist.cells[c].name.clone()).collect(),
            n,
            seed,
        })
    }

    pub fn member_ids(&self, netlist: &Netlist) -> Result<Vec<CellId>> {
        self.members
            .iter()
            .map(|m| netlist.cell_by_name(m).ok_or_else(|| Error::UnknownCell(m.clone())))
            .collect()
    }

    /// Declared fences plus the watermark region with exclusive polarity.
    pub fn constraints(&self, netlist: &Netlist) -> Result<RegionConstraintSet> {
        let members = self.member_ids(netlist)?;
        if let Some(&c) = members.iter().find(|&&c| !netlist.cells[c].is_placeable()) {
            return Err(Error::InvalidArgument(format!("member `{}` is not movable", netlist.cells[c].name)));
        }
        let mut set = RegionConstraintSet::from_fences(netlist);
        let region = Region::new(netlist.fences.len(), vec![self.region], RegionKind::Watermark)?;
        set.push(netlist, region, members, Polarity::MembersInsideOthersOutside)?;
        Ok(set)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("secret serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("secret", 0, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), 0, e.to_string()))
    }
}

/// Re-places `placement` with the watermark region added to the constraints.
pub fn insert(netlist: &Netlist, placement: &Placement, secret: &WatermarkSecret, config: &PlacerConfig) -> Result<Placement> {
    let set = secret.constraints(netlist)?;
    place_flow(netlist, placement, &set, config)
}

/// Percentage of members whose lower-left corner lies in the region.
pub fn extract(netlist: &Netlist, placement: &Placement, secret: &WatermarkSecret) -> Result<f64> {
    let ids = secret.member_ids(netlist)?;
    if ids.is_empty() {
        return Err(Error::Empty("secret has no members".into()));
    }
    let found = ids
        .iter()
        .filter(|&&c| {
            let (x, y) = placement.get(c);
            secret.region.contains_point(x, y)
        })
        .count();
    Ok(100.0 * found as f64 / ids.len() as f64)
}

/// Wirelength of `candidate` relative to `baseline`.
pub fn pwlr(netlist: &Netlist, baseline: &Placement, candidate: &Placement) -> Result<f64> {
    let base = hpwl(netlist, baseline)?;
    if base == 0.0 {
        return Err(Error::InvalidArgument("baseline wirelength is zero".into()));
    }
    Ok(hpwl(netlist, candidate)? / base)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::netlist::fixtures::*;
    use crate::netlist::{synth_design, validate, SynthParams};

    #[test]
    fn label_cases() {
        assert_eq!(transform_label(0.99, 0.01), 0.0);
        assert!((transform_label(1.005, 0.01) - 0.5).abs() < 1e-12);
        assert_eq!(transform_label(1.02, 0.01), 1.0);
        assert_eq!(transform_label(1.0, 0.01), 0.0);
    }

    proptest! {
        #[test]
        fn label_monotone_and_bounded(a in 0.5f64..1.5, b in 0.5f64..1.5, beta in 0.001f64..0.1) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (la, lb) = (transform_label(lo, beta), transform_label(hi, beta));
            prop_assert!((0.0..=1.0).contains(&la) && (0.0..=1.0).contains(&lb));
            prop_assert!(la <= lb);
        }
    }

    fn ten_cell_design() -> (Netlist, Placement) {
        let cells = (0..10).map(|i| std_cell(i, &format!("c{i}"), 1)).collect();
        let nets = (0..9).map(|i| net(i, &[i, i + 1])).collect();
        let nl = Netlist::new(cells, nets, rows(4, 20, 1.0), vec![], vec![None; 10]).unwrap();
        let pl = Placement::new((0..10).map(|i| ((i * 2) as f64, (i % 4) as f64)).collect());
        (nl, pl)
    }

    fn secret_with(region: Rect, members: &[&str]) -> WatermarkSecret {
        WatermarkSecret {
            center: members[0].into(),
            region,
            members: members.iter().map(|s| s.to_string()).collect(),
            n: 2,
            seed: 0,
        }
    }

    #[test]
    fn extract_counts_half_open() {
        let (nl, mut pl) = ten_cell_design();
        let names: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let s = secret_with(Rect::new(0.0, 0.0, 20.0, 4.0), &refs);
        assert_eq!(extract(&nl, &pl, &s).unwrap(), 100.0);
        pl.set(0, 20.0, 0.0);
        pl.set(1, 5.0, 4.0);
        assert_eq!(extract(&nl, &pl, &s).unwrap(), 80.0);
        let s = secret_with(Rect::new(0.0, 0.0, 2.0, 1.0), &["c0"]);
        pl.set(0, 2.0, 0.0);
        assert_eq!(extract(&nl, &pl, &s).unwrap(), 0.0, "high-x boundary is outside");
        pl.set(0, 0.0, 0.0);
        assert_eq!(extract(&nl, &pl, &s).unwrap(), 100.0, "low edges are inside");
        assert!(matches!(extract(&nl, &pl, &secret_with(s.region, &["nope"])), Err(Error::UnknownCell(_))));
    }

    #[test]
    fn pwlr_identity_and_stretch() {
        let (nl, pl) = three_cell();
        assert_eq!(pwlr(&nl, &pl, &pl).unwrap(), 1.0);
        // Baseline hpwl: net0 = 3, net1 = 3 + 1 = 4 -> 7. Stretch net1 by 0.7 along x.
        let mut cand = pl.clone();
        cand.set(2, 6.7, 1.0);
        assert!((pwlr(&nl, &pl, &cand).unwrap() - 7.7 / 7.0).abs() < 1e-12);
        let zero = Placement::new(vec![(0.0, 0.0); 3]);
        assert!(pwlr(&nl, &zero, &pl).is_err());
    }

    #[test]
    fn region_shifted_inside_core() {
        let (nl, pl) = synth_design(SynthParams::new(500, 550, 0.6, 0, 0, 1)).unwrap();
        let core = nl.core();
        let (w, h) = region_size(&nl, 10);
        for c in 0..nl.cells.len() {
            let r = region_rect(&nl, &pl, c, 10).unwrap();
            assert!(core.contains_rect(&r));
            assert_eq!((r.width(), r.height()), (w, h));
            assert_eq!(r.x0.fract(), 0.0);
        }
    }

    #[test]
    fn secret_round_trips_through_toml() {
        let (nl, pl) = synth_design(SynthParams::new(400, 440, 0.6, 1, 1, 2)).unwrap();
        let c = nl.placeable_cells().find(|c| nl.fence_of[c.id].is_none()).unwrap().id;
        let s = WatermarkSecret::capture(&nl, &pl, c, 5, 7).unwrap();
        assert_eq!(WatermarkSecret::from_toml(&s.to_toml()).unwrap(), s);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("secret.toml");
        s.save(&p).unwrap();
        assert_eq!(WatermarkSecret::load(&p).unwrap(), s);
    }

    #[test]
    fn insertion_pulls_members_in_and_pushes_others_out() {
        let (nl, init) = synth_design(SynthParams::new(400, 440, 0.6, 0, 0, 3)).unwrap();
        let base = place_flow(&nl, &init, &RegionConstraintSet::new(), &PlacerConfig::default()).unwrap();
        let center = nl.cells.len() / 2;
        let mut s = WatermarkSecret::capture(&nl, &base, center, 4, 0).unwrap();
        // One current occupant dropped from the members, and a far-away cell no larger added.
        let dropped = s.members.pop().unwrap();
        let limit = nl.cells[nl.cell_by_name(&dropped).unwrap()].area();
        let far = (0..nl.cells.len())
            .filter(|&c| c != nl.cell_by_name(&dropped).unwrap() && !s.members.contains(&nl.cells[c].name))
            .filter(|&c| nl.cells[c].area() <= limit)
            .max_by(|&a, &b| {
                let d = |c: usize| (base.get(c).0 - s.region.x0).abs() + (base.get(c).1 - s.region.y0).abs();
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        s.members.push(nl.cells[far].name.clone());
        let out = insert(&nl, &base, &s, &PlacerConfig::incremental()).unwrap();
        assert!(validate(&nl, &out).is_clean());
        assert_eq!(extract(&nl, &out, &s).unwrap(), 100.0);
        let d = nl.cell_by_name(&dropped).unwrap();
        assert!(!s.region.intersects(&out.footprint(&nl, d)));
        for c in nl.placeable_cells() {
            let inside = s.region.intersects(&out.footprint(&nl, c.id));
            assert_eq!(inside, s.members.contains(&c.name), "cell {}", c.name);
        }
    }
}
