//! Space-filling vector quantization.
//!
//! A codebook here is an ordered list of codewords; the polyline through consecutive codewords
//! is trained to be a quantizer in its own right, which keeps index-adjacent codewords close in
//! space. Alongside the trainer live a plain VQ baseline, TSP reordering heuristics, arrangement
//! and distortion metrics, direction tools and file formats.

#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod datasets;
pub mod directions;
pub mod error;
pub mod io;
pub mod optim;
pub mod ordering;
pub mod quantizer;
mod vectors;

pub use error::{Error, Result};
pub use quantizer::{Codebook, SegmentAssignment, TrainConfig};
pub use vectors::VectorSet;
