//! Push/pull dataflow engine for hybrid positioning.
//!
//! A [`graph::Model`] wires sources, processing nodes and sinks into an
//! immutable graph. Frames ([`model::DataFrame`]) carry data objects whose
//! positions are kept in a global [`geometry::ReferenceSpace`]; sinks persist
//! them through the model's [`services`].

pub mod algorithms;
pub mod geometry;
pub mod graph;
pub mod model;
pub mod services;
pub mod units;
pub mod workers;
