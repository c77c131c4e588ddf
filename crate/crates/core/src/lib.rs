//! F-informed multidimensional scaling for grouped ecological data.
//!
//! Distances ([`dist`]), PERMANOVA ([`permanova`]), metric MDS ([`mds`]),
//! the label-aware F-MDS embedding and a supervised-MDS baseline ([`fmds`]),
//! embedding quality metrics ([`metrics`]) and synthetic data ([`simulate`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod fmds;
pub mod mds;
pub mod metrics;
pub mod permanova;
pub mod phylo;
pub mod rng;
pub mod simulate;
pub mod types;

pub use error::{Error, ErrorCategory, Result};
pub use rng::SeededRng;
pub use types::{AbundanceTable, DistanceMatrix, Embedding, LabelVector};
