//! Placement engine: wirelength, the smoothed wirelength + density objective,
//! analytic global placement with hard region projection, Tetris-style
//! legalization and local-search detailed placement.

mod constraints;
mod density;
mod detailed;
mod global;
mod hpwl;
mod legalize;
mod sites;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{Netlist, Placement};

pub use constraints::{Polarity, RegionConstraint, RegionConstraintSet};
pub use density::{objective, DensityGrid};
pub use detailed::detailed_place;
pub use global::global_place;
pub use hpwl::{hpwl, net_hpwl};
pub use legalize::legalize;
pub(crate) use sites::SiteGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacerConfig {
    /// Initial density multiplier.
    pub lambda: f64,
    /// Multiplier applied to lambda every `lambda_period` iterations.
    pub lambda_growth: f64,
    pub lambda_period: usize,
    /// Density bin width in sites; bins are one row tall.
    pub bin_size: u32,
    pub max_global_iters: usize,
    pub detailed_passes: usize,
    pub seed: u64,
    /// Largest per-iteration move, in sites.
    pub step_size: f64,
    /// Initial log-sum-exp temperature, in sites.
    pub smoothing: f64,
    /// Temperature floor reached by annealing.
    pub smoothing_min: f64,
    /// Half-width (sites) and half-height (rows) of the relocation window.
    pub window_sites: i64,
    pub window_rows: i64,
}

impl Default for PlacerConfig {
    fn default() -> Self {
        PlacerConfig {
            lambda: 0.1,
            lambda_growth: 2.0,
            lambda_period: 50,
            bin_size: 4,
            max_global_iters: 500,
            detailed_passes: 8,
            seed: 0,
            step_size: 4.0,
            smoothing: 8.0,
            smoothing_min: 0.5,
            window_sites: 16,
            window_rows: 2,
        }
    }
}

impl PlacerConfig {
    /// Settings for re-placing an already legal layout under a new constraint:
    /// projection, legalization and detailed placement only.
    pub fn incremental() -> Self {
        PlacerConfig { max_global_iters: 0, ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_size < 1 {
            return Err(Error::InvalidArgument("bin_size must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !(self.step_size > 0.0) || !(self.smoothing > 0.0) || !(self.smoothing_min > 0.0) {
            return Err(Error::InvalidArgument("lambda >= 0, step_size > 0 and smoothing > 0 required".into()));
        }
        if self.lambda_period == 0 {
            return Err(Error::InvalidArgument("lambda_period must be >= 1".into()));
        }
        Ok(())
    }
}

/// Global placement, legalization and detailed placement in sequence.
pub fn place_flow(
    netlist: &Netlist,
    init: &Placement,
    constraints: &RegionConstraintSet,
    config: &PlacerConfig,
) -> Result<Placement> {
    let gp = global_place(netlist, init, constraints, config)?;
    let lg = legalize(netlist, &gp, constraints)?;
    detailed_place(netlist, &lg, constraints, config)
}
