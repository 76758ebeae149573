//! Watermark removal attacks. Each one is a pure function of the public
//! netlist, the placement under attack and a seed; none sees a secret or key.

use std::fmt;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::baselines::{icmarks_search, IcmarksScore};
use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::netlist::{CellId, Netlist, Placement};
use crate::place::{detailed_place, legalize, PlacerConfig, RegionConstraintSet, SiteGrid};
use crate::rng::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    LocationSwap,
    ConstraintPerturb,
    Optimization,
    AdaptiveRegion,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::LocationSwap => "location-swap",
            AttackKind::ConstraintPerturb => "constraint-perturb",
            AttackKind::Optimization => "optimization",
            AttackKind::AdaptiveRegion => "adaptive-region",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "location-swap" | "swap" => AttackKind::LocationSwap,
            "constraint-perturb" | "perturb" => AttackKind::ConstraintPerturb,
            "optimization" | "opt" => AttackKind::Optimization,
            "adaptive-region" | "adaptive" => AttackKind::AdaptiveRegion,
            _ => return Err(Error::InvalidArgument(format!("unknown attack `{s}`"))),
        })
    }
}

/// One attack setting. `strength` is a cell fraction for the swap and
/// perturbation attacks, the number of windows for the adaptive attack and
/// ignored by the optimization attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    #[serde(default)]
    pub strength: f64,
    #[serde(default)]
    pub seed: u64,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AttackKind::LocationSwap | AttackKind::ConstraintPerturb if !(self.strength > 0.0 && self.strength <= 1.0) => {
                Err(Error::InvalidArgument(format!("{} strength must be in (0, 1]", self.kind.as_str())))
            }
            AttackKind::AdaptiveRegion if !(self.strength >= 1.0) || self.strength.fract() != 0.0 => {
                Err(Error::InvalidArgument("adaptive-region strength is a window count >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Short label such as `location-swap@0.001`.
    pub fn label(&self) -> String {
        match self.kind {
            AttackKind::Optimization => self.kind.as_str().to_string(),
            _ => format!("{}@{}", self.kind.as_str(), self.strength),
        }
    }
}

/// Runs one configured attack. `region_size` is the watermark region size
/// the adaptive attacker is assumed to know.
pub fn apply_attack(
    netlist: &Netlist,
    placement: &Placement,
    attack: &AttackConfig,
    region_size: (f64, f64),
    placer: &PlacerConfig,
) -> Result<Placement> {
    attack.validate()?;
    match attack.kind {
        AttackKind::LocationSwap => location_swap(netlist, placement, attack.strength, attack.seed),
        AttackKind::ConstraintPerturb => constraint_perturb(netlist, placement, attack.strength, attack.seed),
        AttackKind::Optimization => optimization_attack(netlist, placement, &placer.clone().with_seed(attack.seed)),
        AttackKind::AdaptiveRegion => {
            adaptive_region_attack(netlist, placement, region_size, attack.strength as usize, attack.seed)
        }
    }
}

fn movable(netlist: &Netlist) -> Vec<CellId> {
    netlist.placeable_cells().map(|c| c.id).collect()
}

/// Picks floor(fraction * movable) cells, rounded down to even, and
/// exchanges the positions of random pairs.
pub fn location_swap(netlist: &Netlist, placement: &Placement, fraction: f64, seed: u64) -> Result<Placement> {
    let pool = movable(netlist);
    let k = (fraction * pool.len() as f64).floor() as usize;
    let k = k - k % 2;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fraction {fraction} selects fewer than 2 of {} cells", pool.len())));
    }
    let mut r = rng(seed);
    let picks = sample(&mut r, pool.len(), k).into_vec();
    let mut out = placement.clone();
    for pair in picks.chunks(2) {
        let (a, b) = (pool[pair[0]], pool[pair[1]]);
        let (pa, pb) = (placement.get(a), placement.get(b));
        out.set(a, pb.0, pb.1);
        out.set(b, pa.0, pa.1);
    }
    Ok(out)
}

/// Moves floor(fraction * movable) random cells one site left or right, or
/// one row up or down, when the destination is free and respects the
/// declared fences. Returns the placement and the number of skipped cells.
pub fn constraint_perturb_counted(
    netlist: &Netlist,
    placement: &Placement,
    fraction: f64,
    seed: u64,
) -> Result<(Placement, usize)> {
    let pool = movable(netlist);
    let k = ((fraction * pool.len() as f64).floor() as usize).min(pool.len());
    let cons = RegionConstraintSet::from_fences(netlist);
    let mut grid = SiteGrid::occupied(netlist, placement);
    let mut r = rng(seed);
    let mut out = placement.clone();
    let mut skipped = 0;
    for i in sample(&mut r, pool.len(), k).into_vec() {
        let c = pool[i];
        let cell = &netlist.cells[c];
        let (x, y) = out.get(c);
        let (dx, dy) = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)][r.random_range(0..4)];
        let (nx, ny) = (x + dx, y + dy);
        let (w, h) = (cell.width as i64, cell.height as i64);
        if grid.fits(nx as i64, ny as i64, w, h, Some(c)) && cons.allows(c, &cell.footprint(nx, ny)) {
            grid.remove(c, x as i64, y as i64, w, h);
            grid.place(c, nx as i64, ny as i64, w, h);
            out.set(c, nx, ny);
        } else {
            skipped += 1;
        }
    }
    Ok((out, skipped))
}

pub fn constraint_perturb(netlist: &Netlist, placement: &Placement, fraction: f64, seed: u64) -> Result<Placement> {
    constraint_perturb_counted(netlist, placement, fraction, seed).map(|(p, _)| p)
}

/// Another round of detailed placement. The attacker honors the fences
/// declared in the public netlist but knows nothing of the watermark.
pub fn optimization_attack(netlist: &Netlist, placement: &Placement, config: &PlacerConfig) -> Result<Placement> {
    detailed_place(netlist, placement, &RegionConstraintSet::from_fences(netlist), config)
}

/// Ranks windows of the watermark size with the window-scoring function and
/// evicts every movable cell with its origin in each of the `top_k` best
/// windows to the nearest free site clear of that window.
pub fn adaptive_region_attack(
    netlist: &Netlist,
    placement: &Placement,
    region_size: (f64, f64),
    top_k: usize,
    seed: u64,
) -> Result<Placement> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be >= 1".into()));
    }
    let ranked = icmarks_search(netlist, placement, region_size, 1)?;
    let cons = RegionConstraintSet::from_fences(netlist);
    let mut grid = SiteGrid::occupied(netlist, placement);
    let rh = netlist.row_height();
    let mut out = placement.clone();
    let mut r = rng(seed);
    for win in ranked.iter().take(top_k) {
        let mut inside: Vec<CellId> = netlist
            .placeable_cells()
            .filter(|c| {
                let (x, y) = out.get(c.id);
                win.rect.contains_point(x, y)
            })
            .map(|c| c.id)
            .collect();
        inside.shuffle(&mut r);
        for c in inside {
            let cell = &netlist.cells[c];
            let (x, y) = out.get(c);
            let (w, h) = (cell.width as i64, cell.height as i64);
            grid.remove(c, x as i64, y as i64, w, h);
            let (nx, ny) = grid
                .nearest_free(x, y, w, h, rh, None, None, |fp| !win.rect.intersects(fp) && cons.allows(c, fp))
                .ok_or_else(|| Error::NoLegalSite(cell.name.clone()))?;
            grid.place(c, nx, ny, w, h);
            out.set(c, nx as f64, ny as f64);
        }
    }
    legalize(netlist, &out, &cons)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgeReport {
    pub candidates: Vec<IcmarksScore>,
    /// Rank (0-based) among the candidates of the first window overlapping the
    /// secret region by at least half its area, when a secret was supplied.
    pub secret_rank: Option<usize>,
    pub secret_supplied: bool,
}

impl ForgeReport {
    pub fn forgeable(&self) -> bool {
        self.secret_rank.is_some()
    }
}

impl fmt::Display for ForgeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "top {} candidate windows by score:", self.candidates.len())?;
        for (i, c) in self.candidates.iter().enumerate() {
            let r = c.rect;
            writeln!(f, "  {i}: ({}, {})-({}, {}) score {:.4} cells {}", r.x0, r.y0, r.x1, r.y1, c.score, c.cell_count)?;
        }
        if self.secret_supplied {
            match self.secret_rank {
                Some(k) => writeln!(f, "verdict: forgeable via scoring (secret region matches candidate {k})"),
                None => writeln!(f, "verdict: not forgeable via scoring (secret region absent from candidates)"),
            }
        } else {
            writeln!(f, "verdict: no secret supplied")
        }
    }
}

/// Checks whether an adversary who only has the scoring function would find
/// the secret region among its `top_k` windows.
pub fn forge_report(
    netlist: &Netlist,
    placement: &Placement,
    region_size: (f64, f64),
    secret: Option<&Rect>,
    top_k: usize,
) -> Result<ForgeReport> {
    if netlist.placeable_cells().next().is_none() {
        return Err(Error::Empty("design has no movable cells".into()));
    }
    let mut candidates = icmarks_search(netlist, placement, region_size, 1)?;
    candidates.truncate(top_k.max(1));
    let secret_rank = secret.and_then(|s| candidates.iter().position(|c| c.rect.overlap_area(s) >= 0.5 * s.area()));
    Ok(ForgeReport { candidates, secret_rank, secret_supplied: secret.is_some() })
}
