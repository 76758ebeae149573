//! End-to-end experiments: baseline placement, model training, watermark
//! search and insertion for every scheme, attacks, extraction, and the
//! CSV/SVG reports.

mod ablate;
mod run;
pub mod svg;

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackConfig, AttackKind};
use crate::error::{Error, Result};
use crate::gnn::TrainConfig;
use crate::graph::{LOCATION_COLUMNS, NAME_COLUMNS, SIZE_COLUMNS};
use crate::place::PlacerConfig;
use crate::watermark::{DEFAULT_AGG_HOPS, DEFAULT_BETA, DEFAULT_GAMMA, DEFAULT_REGION_ROWS};

pub use ablate::{cmd_ablate, AblationAxis, AblationRow};
pub use run::{bench_search, cmd_bench_search, cmd_run, BenchReport, MetricsRow, RunReport, METRICS_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GnnRegion,
    Icmarks,
    RowParity,
    CellScatter,
    Buffer,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::GnnRegion, Scheme::Icmarks, Scheme::RowParity, Scheme::CellScatter, Scheme::Buffer];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::GnnRegion => "gnn-region",
            Scheme::Icmarks => "icmarks",
            Scheme::RowParity => "row-parity",
            Scheme::CellScatter => "cell-scatter",
            Scheme::Buffer => "buffer",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

/// Where test designs come from: a Bookshelf design, or `count` synthetic ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSpec {
    pub aux: Option<PathBuf>,
    pub cells: usize,
    pub nets: usize,
    pub util: f64,
    pub macros: usize,
    pub fences: usize,
    pub count: usize,
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec { aux: None, cells: 2000, nets: 2200, util: 0.7, macros: 2, fences: 1, count: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    /// Load this model instead of training one.
    pub load: Option<PathBuf>,
    /// Synthetic training designs, disjoint from the test designs.
    pub train_designs: usize,
    /// Grid-sample draws per training design.
    pub draws: usize,
    pub depth: usize,
    pub hidden: usize,
    /// Feature groups zeroed for training and inference: location, size, cell-name.
    pub zero_features: Vec<String>,
    pub train: TrainConfig,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            load: None,
            train_designs: 8,
            draws: 6,
            depth: 7,
            hidden: 64,
            zero_features: vec![],
            train: TrainConfig { epochs: 40, batch_size: 32, learning_rate: 0.05, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WatermarkSpec {
    /// Region height in rows.
    pub n: u32,
    pub beta: f64,
    pub gamma: f64,
    pub agg_hops: usize,
    /// Ranked candidates tried before a region scheme gives up.
    pub max_attempts: usize,
    /// Signature bits of row parity and cell scattering.
    pub sig_len: usize,
    /// Signature bits of buffer insertion (one keyed net each).
    pub buffer_bits: usize,
    /// Buffer search window half-width (sites) and half-height (rows).
    pub buffer_window: (i64, i64),
    /// Fewest cells a window-scored region may hold.
    pub region_min_cells: usize,
}

impl Default for WatermarkSpec {
    fn default() -> Self {
        WatermarkSpec {
            n: DEFAULT_REGION_ROWS,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            agg_hops: DEFAULT_AGG_HOPS,
            max_attempts: 10,
            sig_len: 1024,
            buffer_bits: 64,
            buffer_window: (16, 2),
            region_min_cells: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub output: PathBuf,
    pub schemes: Vec<Scheme>,
    pub attacks: Vec<AttackConfig>,
    pub design: DesignSpec,
    pub model: ModelSpec,
    pub watermark: WatermarkSpec,
    pub placer: PlacerConfig,
}

pub fn default_attacks() -> Vec<AttackConfig> {
    let a = |kind, strength| AttackConfig { kind, strength, seed: 0 };
    vec![
        a(AttackKind::Optimization, 0.0),
        a(AttackKind::LocationSwap, 0.001),
        a(AttackKind::LocationSwap, 0.005),
        a(AttackKind::LocationSwap, 0.01),
        a(AttackKind::ConstraintPerturb, 0.01),
        a(AttackKind::ConstraintPerturb, 0.05),
        a(AttackKind::AdaptiveRegion, 1.0),
    ]
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            seed: 0,
            output: PathBuf::from("out"),
            schemes: Scheme::ALL.to_vec(),
            attacks: default_attacks(),
            design: DesignSpec::default(),
            model: ModelSpec::default(),
            watermark: WatermarkSpec::default(),
            placer: PlacerConfig::default(),
        }
    }
}

/// Feature columns of a named group.
pub fn feature_group(name: &str) -> Result<Range<usize>> {
    match name {
        "location" => Ok(LOCATION_COLUMNS),
        "size" => Ok(SIZE_COLUMNS),
        "cell-name" => Ok(NAME_COLUMNS),
        _ => Err(Error::InvalidArgument(format!("unknown feature group `{name}` (location, size, cell-name)"))),
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("experiment spec: {e}")))?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::from_toml(&text)?;
        // Relative design and model paths are resolved against the experiment file's directory.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut spec.design.aux, &mut spec.model.load].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    /// Feature columns to zero, from `model.zero_features`.
    pub fn zeroed_columns(&self) -> Result<Vec<usize>> {
        let mut cols = Vec::new();
        for g in &self.model.zero_features {
            cols.extend(feature_group(g)?);
        }
        cols.sort_unstable();
        cols.dedup();
        Ok(cols)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.schemes.is_empty() {
            return bad("no schemes selected");
        }
        for p in [&self.design.aux, &self.model.load].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::InvalidArgument(format!("{} does not exist", p.display())));
            }
        }
        let d = &self.design;
        if d.aux.is_none() && (d.count == 0 || d.cells == 0) {
            return bad("design.count and design.cells must be positive");
        }
        let m = &self.model;
        if m.load.is_none() && self.schemes.contains(&Scheme::GnnRegion) && (m.train_designs == 0 || m.draws == 0) {
            return bad("model.train_designs and model.draws must be positive");
        }
        if m.depth == 0 || m.hidden == 0 {
            return bad("model.depth and model.hidden must be positive");
        }
        TrainConfig { fanouts: m.train.fanouts_for_depth(m.depth), ..m.train.clone() }.validate(m.depth)?;
        self.zeroed_columns()?;
        let w = &self.watermark;
        if w.n == 0 || w.max_attempts == 0 || w.sig_len == 0 || w.buffer_bits == 0 {
            return bad("watermark.n, max_attempts, sig_len and buffer_bits must be positive");
        }
        if !(w.beta > 0.0 && w.gamma >= 0.0) {
            return bad("watermark.beta must be > 0 and gamma >= 0");
        }
        if w.buffer_window.0 < 0 || w.buffer_window.1 < 0 {
            return bad("watermark.buffer_window must be non-negative");
        }
        self.placer.validate()?;
        self.attacks.iter().try_for_each(AttackConfig::validate)
    }
}
