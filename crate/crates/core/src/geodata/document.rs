//! Line-delimited geodata documents.
//!
//! One JSON object per line; blank lines and lines starting with `#` are
//! skipped. See `docs/formats.md` for the grammar.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    project_to_local, BuildingAttributeRecord, Edge, GeodataError, LonLat, Node, RoadClass, StreetNetwork,
};
use crate::geom::{Point2, Polygon};

/// Positions closer than this are the same node.
pub const NODE_MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crs {
    /// Coordinates are already planar meters.
    Local,
    /// Coordinates are `[lon, lat]` degrees, projected about `origin`.
    Lonlat,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Header(HeaderRecord),
    Node(NodeRecord),
    Edge(EdgeRecord),
    Building(BuildingRecord),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    crs: Crs,
    origin: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: u64,
    coordinates: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    id: u64,
    nodes: [u64; 2],
    road_class: String,
    width: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingRecord {
    coordinates: Option<[f64; 2]>,
    footprint: Option<Vec<[f64; 2]>>,
    levels: Option<u32>,
    height: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawNode {
    pub id: u64,
    pub position: Point2,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawEdge {
    pub id: u64,
    pub nodes: [u64; 2],
    pub class: RoadClass,
    pub width: Option<f64>,
    pub line: usize,
}

/// Parsed document with coordinates already in local meters.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodataDocument {
    pub crs: Crs,
    pub origin: Option<LonLat>,
    pub nodes: Vec<RawNode>,
    pub edges: Vec<RawEdge>,
    pub buildings: Vec<BuildingAttributeRecord>,
    pub unknown_road_classes: usize,
}

/// Non-fatal normalizations applied while building a network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub unknown_road_classes: usize,
    pub merged_nodes: usize,
    pub dropped_edges: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> GeodataError {
    GeodataError::Parse { line, message: message.into() }
}

fn finite_point(line: usize, c: [f64; 2]) -> Result<Point2, GeodataError> {
    let p = Point2::new(c[0], c[1]);
    if !p.is_finite() {
        return Err(parse_err(line, "non-finite coordinate"));
    }
    Ok(p)
}

pub fn parse_document(text: &str) -> Result<GeodataDocument, GeodataError> {
    let mut crs = Crs::Local;
    let mut origin: Option<LonLat> = None;
    let mut seen_record = false;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    // Building coordinates stay raw until all records are read.
    let mut buildings: Vec<(usize, Option<Point2>, Option<Vec<Point2>>, Option<u32>, Option<f64>)> = Vec::new();
    let mut unknown = 0;
    let mut node_ids = HashSet::new();
    let mut edge_ids = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: Record = serde_json::from_str(trimmed).map_err(|e| parse_err(line, e.to_string()))?;
        match record {
            Record::Header(h) => {
                if seen_record {
                    return Err(parse_err(line, "header must be the first record"));
                }
                crs = h.crs;
                origin = h.origin.map(|o| LonLat::new(o[0], o[1]));
                if crs == Crs::Local && origin.is_some() {
                    return Err(parse_err(line, "origin is only valid with crs \"lonlat\""));
                }
            }
            Record::Node(n) => {
                if !node_ids.insert(n.id) {
                    return Err(parse_err(line, format!("duplicate node id {}", n.id)));
                }
                nodes.push(RawNode { id: n.id, position: finite_point(line, n.coordinates)?, line });
            }
            Record::Edge(e) => {
                if !edge_ids.insert(e.id) {
                    return Err(parse_err(line, format!("duplicate edge id {}", e.id)));
                }
                if e.nodes[0] == e.nodes[1] {
                    return Err(parse_err(line, format!("edge {} connects node {} to itself", e.id, e.nodes[0])));
                }
                if let Some(w) = e.width {
                    if !(w.is_finite() && w > 0.0) {
                        return Err(parse_err(line, format!("edge {} has invalid width {w}", e.id)));
                    }
                }
                let class = e.road_class.parse().unwrap_or_else(|()| {
                    unknown += 1;
                    RoadClass::Residential
                });
                edges.push(RawEdge { id: e.id, nodes: e.nodes, class, width: e.width, line });
            }
            Record::Building(b) => {
                let position = b.coordinates.map(|c| finite_point(line, c)).transpose()?;
                let footprint = b
                    .footprint
                    .map(|f| f.into_iter().map(|c| finite_point(line, c)).collect::<Result<Vec<_>, _>>())
                    .transpose()?;
                if position.is_none() && footprint.is_none() {
                    return Err(parse_err(line, "building needs coordinates or a footprint"));
                }
                if b.levels == Some(0) {
                    return Err(parse_err(line, "building levels must be positive"));
                }
                if let Some(h) = b.height {
                    if !(h.is_finite() && h > 0.0) {
                        return Err(parse_err(line, format!("invalid building height {h}")));
                    }
                }
                buildings.push((line, position, footprint, b.levels, b.height));
            }
        }
        seen_record = true;
    }

    // Project geographic coordinates.
    if crs == Crs::Lonlat {
        let reference = match origin {
            Some(o) => o,
            None => {
                let pts: Vec<Point2> = nodes
                    .iter()
                    .map(|n| n.position)
                    .chain(buildings.iter().filter_map(|b| b.1))
                    .collect();
                if pts.is_empty() {
                    return Err(GeodataError::Domain("lonlat document without coordinates".into()));
                }
                let n = pts.len() as f64;
                let sum = pts.iter().fold(Point2::default(), |a, p| a + *p);
                origin = Some(LonLat::new(sum.x / n, sum.y / n));
                origin.unwrap()
            }
        };
        let project = |p: Point2| -> Result<Point2, GeodataError> {
            Ok(project_to_local(&[LonLat::new(p.x, p.y)], reference)?[0])
        };
        for n in &mut nodes {
            n.position = project(n.position)?;
        }
        for b in &mut buildings {
            if let Some(p) = b.1 {
                b.1 = Some(project(p)?);
            }
            if let Some(f) = &mut b.2 {
                for p in f.iter_mut() {
                    *p = project(*p)?;
                }
            }
        }
    }

    let buildings = buildings
        .into_iter()
        .map(|(line, position, footprint, levels, height)| {
            let footprint = footprint.map(Polygon::new);
            if let Some(f) = &footprint {
                if !f.is_simple() {
                    return Err(parse_err(line, "building footprint is not a simple polygon"));
                }
            }
            let position = position.unwrap_or_else(|| footprint.as_ref().map(Polygon::centroid).unwrap_or_default());
            Ok(BuildingAttributeRecord { position, footprint, levels, height })
        })
        .collect::<Result<Vec<_>, GeodataError>>()?;

    Ok(GeodataDocument { crs, origin, nodes, edges, buildings, unknown_road_classes: unknown })
}

impl GeodataDocument {
    /// Builds the street network: resolves node references, merges
    /// coincident nodes, and drops edges that collapse or duplicate another.
    pub fn street_network(&self) -> Result<(StreetNetwork, ParseReport), GeodataError> {
        let mut report = ParseReport { unknown_road_classes: self.unknown_road_classes, ..Default::default() };

        let mut by_id: HashMap<u64, usize> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            by_id.insert(n.id, i);
        }
        for e in &self.edges {
            for nid in e.nodes {
                if !by_id.contains_key(&nid) {
                    return Err(GeodataError::MissingNode { line: e.line, edge_id: e.id, node_id: nid });
                }
            }
        }
        if self.edges.is_empty() {
            return Err(GeodataError::EmptyNetwork);
        }

        // Merge coincident nodes via a hash grid at the merge tolerance.
        let cell = |p: Point2| ((p.x / NODE_MERGE_TOLERANCE).floor() as i64, (p.y / NODE_MERGE_TOLERANCE).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut canonical = vec![0usize; self.nodes.len()];
        let mut nodes: Vec<Node> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let (cx, cy) = cell(n.position);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = grid.get(&(cx + dx, cy + dy)) {
                        for &k in list {
                            if nodes[k].position.distance(n.position) <= NODE_MERGE_TOLERANCE {
                                found = Some(k);
                                break 'search;
                            }
                        }
                    }
                }
            }
            canonical[i] = match found {
                Some(k) => {
                    report.merged_nodes += 1;
                    k
                }
                None => {
                    nodes.push(Node { id: n.id, position: n.position });
                    grid.entry((cx, cy)).or_default().push(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
        }

        let mut seen_pairs = HashSet::new();
        let mut edges = Vec::new();
        for e in &self.edges {
            let a = canonical[by_id[&e.nodes[0]]];
            let b = canonical[by_id[&e.nodes[1]]];
            if a == b || !seen_pairs.insert((a.min(b), a.max(b))) {
                report.dropped_edges += 1;
                continue;
            }
            edges.push(Edge { id: e.id, a, b, class: e.class, width: e.width });
        }
        if edges.is_empty() {
            return Err(GeodataError::EmptyNetwork);
        }

        Ok((StreetNetwork::from_parts(nodes, edges), report))
    }
}

pub fn parse_street_network(text: &str) -> Result<(StreetNetwork, ParseReport), GeodataError> {
    parse_document(text)?.street_network()
}

/// Serializes a network (local meters) in the document grammar.
pub fn write_street_network(network: &StreetNetwork) -> String {
    write_document(network, &[])
}

pub fn write_document(network: &StreetNetwork, buildings: &[BuildingAttributeRecord]) -> String {
    let mut out = String::from("{\"type\":\"header\",\"crs\":\"local\"}\n");
    for n in &network.nodes {
        let _ = writeln!(
            out,
            "{{\"type\":\"node\",\"id\":{},\"coordinates\":[{},{}]}}",
            n.id,
            fmt_f64(n.position.x),
            fmt_f64(n.position.y)
        );
    }
    for e in &network.edges {
        let _ = write!(
            out,
            "{{\"type\":\"edge\",\"id\":{},\"nodes\":[{},{}],\"road_class\":\"{}\"",
            e.id, network.nodes[e.a].id, network.nodes[e.b].id, e.class
        );
        if let Some(w) = e.width {
            let _ = write!(out, ",\"width\":{}", fmt_f64(w));
        }
        out.push_str("}\n");
    }
    for b in buildings {
        let _ = write!(
            out,
            "{{\"type\":\"building\",\"coordinates\":[{},{}]",
            fmt_f64(b.position.x),
            fmt_f64(b.position.y)
        );
        if let Some(f) = &b.footprint {
            let coords: Vec<String> = f.ring.iter().map(|p| format!("[{},{}]", fmt_f64(p.x), fmt_f64(p.y))).collect();
            let _ = write!(out, ",\"footprint\":[{}]", coords.join(","));
        }
        if let Some(l) = b.levels {
            let _ = write!(out, ",\"levels\":{l}");
        }
        if let Some(h) = b.height {
            let _ = write!(out, ",\"height\":{}", fmt_f64(h));
        }
        out.push_str("}\n");
    }
    out
}

/// Shortest representation that round-trips, always with a decimal point.
fn fmt_f64(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}
