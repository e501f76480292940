//! Input geodata: street network, building attribute records, terrain, and
//! land-use inference from road classes.

mod document;
mod projection;
mod terrain;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Bounds2, Point2, Polygon};

pub use document::{parse_document, parse_street_network, write_document, write_street_network, Crs, GeodataDocument, ParseReport};
pub use projection::{project_to_local, LonLat, METERS_PER_DEGREE};
pub use terrain::{parse_terrain, write_terrain, TerrainGrid};

#[derive(Debug, Error)]
pub enum GeodataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: edge {edge_id} references missing node {node_id}")]
    MissingNode { line: usize, edge_id: u64, node_id: u64 },
    #[error("street network has no edges")]
    EmptyNetwork,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point ({x:.3}, {y:.3}) lies outside the terrain grid")]
    OutOfBounds { x: f64, y: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Motorway,
    Trunk,
    Primary,
    Secondary,
    Residential,
    Service,
}

impl RoadClass {
    pub const ALL: [RoadClass; 6] = [
        RoadClass::Motorway,
        RoadClass::Trunk,
        RoadClass::Primary,
        RoadClass::Secondary,
        RoadClass::Residential,
        RoadClass::Service,
    ];

    /// Importance weight used for land-use inference.
    pub fn weight(self) -> f64 {
        match self {
            RoadClass::Motorway | RoadClass::Trunk => 4.0,
            RoadClass::Primary => 3.0,
            RoadClass::Secondary => 2.0,
            RoadClass::Residential | RoadClass::Service => 1.0,
        }
    }

    /// Default carriageway width in meters, sidewalks included.
    pub fn default_width(self) -> f64 {
        match self {
            RoadClass::Motorway => 24.0,
            RoadClass::Trunk => 20.0,
            RoadClass::Primary => 16.0,
            RoadClass::Secondary => 12.0,
            RoadClass::Residential => 8.0,
            RoadClass::Service => 5.0,
        }
    }

    pub fn has_sidewalk(self) -> bool {
        matches!(self, RoadClass::Primary | RoadClass::Secondary | RoadClass::Residential)
    }

    /// Primary or above.
    pub fn is_major(self) -> bool {
        matches!(self, RoadClass::Motorway | RoadClass::Trunk | RoadClass::Primary)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoadClass::Motorway => "motorway",
            RoadClass::Trunk => "trunk",
            RoadClass::Primary => "primary",
            RoadClass::Secondary => "secondary",
            RoadClass::Residential => "residential",
            RoadClass::Service => "service",
        }
    }
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoadClass {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        RoadClass::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandUse {
    Residential,
    Commercial,
    Green,
}

impl LandUse {
    pub const ALL: [LandUse; 3] = [LandUse::Residential, LandUse::Commercial, LandUse::Green];

    pub fn as_str(self) -> &'static str {
        match self {
            LandUse::Residential => "residential",
            LandUse::Commercial => "commercial",
            LandUse::Green => "green",
        }
    }
}

impl fmt::Display for LandUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u64,
    pub position: Point2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: u64,
    /// Index into `StreetNetwork::nodes`.
    pub a: usize,
    pub b: usize,
    pub class: RoadClass,
    pub width: Option<f64>,
}

impl Edge {
    pub fn width(&self) -> f64 {
        self.width.unwrap_or_else(|| self.class.default_width())
    }
}

/// Planar street graph in local meters.
#[derive(Clone, Debug, PartialEq)]
pub struct StreetNetwork {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    edge_lookup: HashMap<u64, usize>,
}

impl StreetNetwork {
    /// Assembles a network from already-validated parts.
    ///
    /// Panics if an edge references a node index out of range or connects a
    /// node to itself; use the document parser for untrusted input.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        for e in &edges {
            assert!(e.a < nodes.len() && e.b < nodes.len() && e.a != e.b, "invalid edge {}", e.id);
        }
        let edge_lookup = edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
        Self { nodes, edges, edge_lookup }
    }

    pub fn edge_by_id(&self, id: u64) -> Option<&Edge> {
        self.edge_lookup.get(&id).map(|&i| &self.edges[i])
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        self.nodes[e.a].position.distance(self.nodes[e.b].position)
    }

    /// Edge indices incident to every node.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            inc[e.a].push(i);
            inc[e.b].push(i);
        }
        inc
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.a == node || e.b == node).count()
    }

    pub fn bounds(&self) -> Bounds2 {
        Bounds2::from_points(self.nodes.iter().map(|n| &n.position))
    }

    pub fn max_node_id(&self) -> u64 {
        self.nodes.iter().map(|n| n.id).max().unwrap_or(0)
    }

    pub fn max_edge_id(&self) -> u64 {
        self.edges.iter().map(|e| e.id).max().unwrap_or(0)
    }
}

/// Building attributes carried by the input (heights, floor counts, footprints).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingAttributeRecord {
    pub position: Point2,
    pub footprint: Option<Polygon>,
    pub levels: Option<u32>,
    pub height: Option<f64>,
}

impl BuildingAttributeRecord {
    /// Records with neither a level count nor a height carry no height prior.
    pub fn contributes(&self) -> bool {
        self.levels.is_some() || self.height.is_some()
    }

    /// Level count implied by the record; heights convert at three meters per floor.
    pub fn level_count(&self) -> Option<u32> {
        match (self.levels, self.height) {
            (Some(l), _) => Some(l),
            (None, Some(h)) => Some(((h / METERS_PER_LEVEL).round() as u32).max(1)),
            (None, None) => None,
        }
    }
}

pub const METERS_PER_LEVEL: f64 = 3.0;

/// Height of a building with the given number of floors.
pub fn height_from_levels(levels: u32) -> Result<f64, GeodataError> {
    if levels < 1 {
        return Err(GeodataError::Domain("level count must be at least 1".into()));
    }
    Ok(METERS_PER_LEVEL * f64::from(levels))
}

/// Length-weighted mean road weight at or above which a plot is commercial.
pub const COMMERCIAL_THRESHOLD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandUseInference {
    pub land_use: LandUse,
    pub weighted_mean: f64,
    /// Set when no classed edge bounded the plot.
    pub unclassified: bool,
}

/// Classifies a plot from the road classes of its bounding edges, weighted by
/// edge length. Unknown edge ids are ignored.
pub fn infer_land_use(network: &StreetNetwork, bounding_edge_ids: &[u64]) -> LandUseInference {
    let mut weight_sum = 0.0;
    let mut length_sum = 0.0;
    for id in bounding_edge_ids {
        if let Some(e) = network.edge_by_id(*id) {
            let len = network.edge_length(e);
            weight_sum += e.class.weight() * len;
            length_sum += len;
        }
    }
    if length_sum <= 0.0 {
        return LandUseInference { land_use: LandUse::Residential, weighted_mean: 0.0, unclassified: true };
    }
    let mean = weight_sum / length_sum;
    let land_use = if mean >= COMMERCIAL_THRESHOLD { LandUse::Commercial } else { LandUse::Residential };
    LandUseInference { land_use, weighted_mean: mean, unclassified: false }
}
