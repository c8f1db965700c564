//! Fully dynamic (Δ+1)-vertex coloring that stays correct against adaptive
//! adversaries.
//!
//! The [`engine::Engine`] consumes a stream of edge insertions and deletions
//! on a graph whose maximum degree never exceeds a cap Δ fixed up front, and
//! keeps a proper coloring with colors `1..=Δ+1` after every update.

pub mod coloring;
pub mod decomposition;
pub mod dense;
pub mod engine;
pub mod friends;
pub mod graph;
pub mod meter;
pub mod oracle;
pub mod params;
pub mod set;
pub mod sparse;
pub mod trace;

pub use graph::{Color, DynamicGraph, EdgeUpdate, GraphError, UpdateKind, VertexId, BLANK};
pub use params::{EngineMode, ParamSet, Profile};
