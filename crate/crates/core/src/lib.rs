//! Procedural generator of geo-typical synthetic overhead imagery with
//! pixel-exact semantic labels, driven by real street-network layouts.

pub mod class;
pub mod dataset;
pub mod geodata;
pub mod geom;
pub mod layout;
pub mod materials;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod scenegen;
pub mod seed;

pub use class::SemanticClass;
