//! Push rumor spreading on random regular graphs and spectral expanders.
//!
//! The crate is `no_std` (it needs `alloc`). It holds everything that is pure
//! computation: the graph type, the configuration model, both protocol
//! engines, the deterministic recursion, spectral checks and tail bounds.
//! File formats, the CLI and the experiment harness live in the `rumor`
//! crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod bounds;
pub mod config_model;
pub mod error;
pub mod graph;
pub mod push;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{fixtures, BfsLayers, Graph, Vertex, VertexSet};
pub use push::{Mode, PhaseThreshold, ProtocolTrace, RoundRecord};
