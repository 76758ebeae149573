//! Constraint-based watermarking of standard-cell placements, with a graph
//! convolutional network that predicts where a watermark region costs the
//! least wirelength.
//!
//! The crate is organized bottom-up:
//!
//! * [`netlist`]: designs, placements, Bookshelf I/O, synthetic designs, validation.
//! * [`place`]: HPWL, the smoothed wirelength + density objective, global
//!   placement with hard region projection, Tetris legalization and detailed placement.
//! * [`graph`]: layout graph construction, name embeddings, grid sampling, k-hop queries.
//! * [`gnn`]: a from-scratch GCN with sampled mini-batch SGD training.
//! * [`watermark`]: label collection, model-guided search, insertion and extraction.
//! * [`baselines`]: row parity, cell scattering, buffer insertion and window scoring.
//! * [`attacks`]: watermark removal attacks and the forging analysis.
//! * [`experiment`]: end-to-end runs, sweeps, ablations and CSV/SVG reports.

pub mod attacks;
pub mod baselines;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod gnn;
pub mod graph;
pub mod netlist;
pub mod place;
pub mod rng;
pub mod watermark;

pub use error::{Error, Result};
pub use geom::Rect;
pub use gnn::{GcnModel, TrainConfig};
pub use graph::LayoutGraph;
pub use netlist::{Cell, CellId, CellKind, Net, Netlist, Pin, Placement, Region, RegionKind, Row};
pub use place::{PlacerConfig, RegionConstraintSet};
pub use watermark::WatermarkSecret;
