//! Union-find decoding with per-shot soft reweighting.

mod decoder;
mod graph;
mod lut;
mod ml;

pub use decoder::UfDecoder;
pub use graph::{graph_from_dem, hard_baseline_graph, int_weight, DecodingGraph, Edge, WEIGHT_SCALE};
pub use lut::{reweight, WeightLut};
pub use ml::{ml_oracle, MlTable, ML_MAX_MECHANISMS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UfError {
    #[error("cannot split hyperedge on detectors {dets:?} into graph edges")]
    Hyperedge { dets: Vec<u32> },
    #[error("no soft value for measurement {tag} (shot has {len})")]
    MissingSoft { tag: u32, len: usize },
    #[error("instance too large for exact decoding: {mechanisms} > {max}")]
    TooLarge { mechanisms: usize, max: usize },
}
