//! Road surfaces: buffered segments, intersection disks, roundabouts and
//! sidewalks.

use serde::{Deserialize, Serialize};

use crate::geodata::{RoadClass, StreetNetwork};
use crate::geom::{circle_polygon, line_intersection, Point2, Polygon};

pub const SIDEWALK_WIDTH: f64 = 1.5;
/// Miters longer than this multiple of the half-width fall back to a flat end.
const MITER_LIMIT: f64 = 4.0;
const DISK_SIDES: usize = 24;
const ROUNDABOUT_SIDES: usize = 32;
/// Inner radius of a roundabout ring as a fraction of its outer radius.
pub const ROUNDABOUT_INNER_RATIO: f64 = 0.4;
/// Tolerance in degrees around a right angle for a four-way crossing.
const CROSSING_TOLERANCE_DEG: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntersectionType {
    Crossing,
    Junction,
    Roundabout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadPieceKind {
    Segment { edge_id: u64 },
    Intersection { node_id: u64, intersection: IntersectionType },
    /// Round cap filling the outside of a sharp bend at a degree-2 node.
    Joint { node_id: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadPiece {
    pub kind: RoadPieceKind,
    pub class: RoadClass,
    pub polygon: Polygon,
    /// Inner boundary of a roundabout ring.
    pub hole: Option<Polygon>,
    pub has_sidewalk: bool,
    pub sidewalks: Vec<Polygon>,
}

impl RoadPiece {
    pub fn area(&self) -> f64 {
        self.polygon.area() - self.hole.as_ref().map_or(0.0, Polygon::area)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoadLayout {
    pub pieces: Vec<RoadPiece>,
    pub skipped_zero_length: usize,
}

impl RoadLayout {
    pub fn segments(&self) -> impl Iterator<Item = &RoadPiece> {
        self.pieces.iter().filter(|p| matches!(p.kind, RoadPieceKind::Segment { .. }))
    }

    pub fn intersections(&self) -> impl Iterator<Item = (&RoadPiece, IntersectionType)> {
        self.pieces.iter().filter_map(|p| match p.kind {
            RoadPieceKind::Intersection { intersection, .. } => Some((p, intersection)),
            _ => None,
        })
    }
}

fn usable_edges(network: &StreetNetwork) -> Vec<usize> {
    (0..network.edges.len()).filter(|&i| network.edge_length(&network.edges[i]) > 1e-9).collect()
}

fn incidence(network: &StreetNetwork, edges: &[usize]) -> Vec<Vec<usize>> {
    let mut inc = vec![Vec::new(); network.nodes.len()];
    for &e in edges {
        inc[network.edges[e].a].push(e);
        inc[network.edges[e].b].push(e);
    }
    inc
}

/// Unit direction leaving `node` along edge `e`.
fn leaving(network: &StreetNetwork, e: usize, node: usize) -> Point2 {
    let edge = &network.edges[e];
    let other = if edge.a == node { edge.b } else { edge.a };
    (network.nodes[other].position - network.nodes[node].position).normalized()
}

fn classify(network: &StreetNetwork, node: usize, incident: &[usize]) -> Option<IntersectionType> {
    let degree = incident.len();
    if degree < 3 {
        return None;
    }
    if degree == 3 {
        return Some(IntersectionType::Junction);
    }
    if degree >= 5 {
        return Some(IntersectionType::Roundabout);
    }
    let mut angles: Vec<f64> = incident
        .iter()
        .map(|&e| {
            let d = leaving(network, e, node);
            d.y.atan2(d.x).to_degrees().rem_euclid(360.0)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let square = (0..4).all(|i| {
        let gap = if i == 3 { angles[0] + 360.0 - angles[3] } else { angles[i + 1] - angles[i] };
        (gap - 90.0).abs() <= CROSSING_TOLERANCE_DEG
    });
    if square {
        Some(IntersectionType::Crossing)
    } else if incident.iter().any(|&e| network.edges[e].class.is_major()) {
        Some(IntersectionType::Roundabout)
    } else {
        Some(IntersectionType::Junction)
    }
}

/// Intersection type of a node, or `None` below degree three.
pub fn classify_intersection(network: &StreetNetwork, node: usize) -> Option<IntersectionType> {
    let edges = usable_edges(network);
    let inc = incidence(network, &edges);
    classify(network, node, &inc[node])
}

struct NodeInfo {
    kind: Option<IntersectionType>,
    max_width: f64,
}

impl NodeInfo {
    /// Distance from the node center where segments stop.
    fn segment_trim(&self) -> f64 {
        match self.kind {
            Some(IntersectionType::Roundabout) => ROUNDABOUT_INNER_RATIO * self.max_width,
            _ => 0.0,
        }
    }

    /// Radius of the paved area owned by the node.
    fn outer_radius(&self) -> f64 {
        match self.kind {
            Some(IntersectionType::Roundabout) => self.max_width,
            Some(_) => 0.5 * self.max_width,
            None => 0.0,
        }
    }
}

/// End corners `(left, right)` of edge `e` at `node`, seen traveling toward
/// the node, plus whether a miter fell back to a flat end.
fn end_corners(network: &StreetNetwork, inc: &[Vec<usize>], info: &[NodeInfo], e: usize, node: usize) -> (Point2, Point2, bool) {
    let p = network.nodes[node].position;
    let w = 0.5 * network.edges[e].width();
    let d_in = -leaving(network, e, node);
    let trim = info[node].segment_trim();
    let flat = |at: Point2| (at + d_in.perp() * w, at - d_in.perp() * w);
    if inc[node].len() != 2 {
        let (l, r) = flat(p - d_in * trim);
        return (l, r, false);
    }
    let f = if inc[node][0] == e { inc[node][1] } else { inc[node][0] };
    if f == e {
        let (l, r) = flat(p);
        return (l, r, false);
    }
    let wf = 0.5 * network.edges[f].width();
    let d_out = leaving(network, f, node);
    let corner = |side: f64| {
        line_intersection(p + d_in.perp() * (side * w), d_in, p + d_out.perp() * (side * wf), d_out)
    };
    match (corner(1.0), corner(-1.0)) {
        (Some(l), Some(r)) => {
            let limit = MITER_LIMIT * w.max(wf);
            if l.distance(p) > limit || r.distance(p) > limit {
                let (l, r) = flat(p);
                (l, r, true)
            } else {
                (l, r, false)
            }
        }
        // Straight continuation.
        _ => {
            let (l, r) = flat(p);
            (l, r, false)
        }
    }
}

/// Road geometry for every edge and every node of degree three or more.
pub fn build_roads(network: &StreetNetwork) -> RoadLayout {
    let edges = usable_edges(network);
    let skipped = network.edges.len() - edges.len();
    let inc = incidence(network, &edges);
    let info: Vec<NodeInfo> = (0..network.nodes.len())
        .map(|n| NodeInfo {
            kind: classify(network, n, &inc[n]),
            max_width: inc[n].iter().map(|&e| network.edges[e].width()).fold(0.0, f64::max),
        })
        .collect();

    let mut pieces = Vec::new();
    let mut joints = std::collections::BTreeSet::new();
    for &e in &edges {
        let edge = &network.edges[e];
        let (pa, pb) = (network.nodes[edge.a].position, network.nodes[edge.b].position);
        let len = pa.distance(pb);
        let (ta, tb) = (info[edge.a].segment_trim(), info[edge.b].segment_trim());
        if ta + tb >= len {
            continue;
        }
        let (la, ra, fa) = end_corners(network, &inc, &info, e, edge.a);
        let (lb, rb, fb) = end_corners(network, &inc, &info, e, edge.b);
        if fa {
            joints.insert(edge.a);
        }
        if fb {
            joints.insert(edge.b);
        }
        // Corners at `a` are seen traveling backwards, so left and right swap there.
        let polygon = Polygon::new(vec![la, rb, lb, ra]);
        let has_sidewalk = edge.class.has_sidewalk();
        let mut sidewalks = Vec::new();
        if has_sidewalk {
            let d = (pb - pa).normalized();
            let n = d.perp();
            let w = 0.5 * edge.width();
            let (sa, sb) = (info[edge.a].outer_radius(), info[edge.b].outer_radius());
            if sa + sb < len && w > SIDEWALK_WIDTH {
                let (s0, s1) = (pa + d * sa, pb - d * sb);
                for side in [1.0, -1.0] {
                    let outer = n * (side * w);
                    let inner = n * (side * (w - SIDEWALK_WIDTH));
                    sidewalks.push(Polygon::new(vec![s0 + inner, s1 + inner, s1 + outer, s0 + outer]));
                }
            }
        }
        pieces.push(RoadPiece {
            kind: RoadPieceKind::Segment { edge_id: edge.id },
            class: edge.class,
            polygon,
            hole: None,
            has_sidewalk,
            sidewalks,
        });
    }

    for (n, node_info) in info.iter().enumerate() {
        let center = network.nodes[n].position;
        let widest = inc[n]
            .iter()
            .map(|&e| network.edges[e].class)
            .max_by(|a, b| a.weight().total_cmp(&b.weight()))
            .unwrap_or(RoadClass::Residential);
        if let Some(kind) = node_info.kind {
            let (polygon, hole) = match kind {
                IntersectionType::Roundabout => (
                    circle_polygon(center, node_info.max_width, ROUNDABOUT_SIDES),
                    Some(circle_polygon(center, ROUNDABOUT_INNER_RATIO * node_info.max_width, ROUNDABOUT_SIDES)),
                ),
                _ => (circle_polygon(center, 0.5 * node_info.max_width, DISK_SIDES), None),
            };
            pieces.push(RoadPiece {
                kind: RoadPieceKind::Intersection { node_id: network.nodes[n].id, intersection: kind },
                class: widest,
                polygon,
                hole,
                has_sidewalk: false,
                sidewalks: Vec::new(),
            });
        } else if joints.contains(&n) {
            pieces.push(RoadPiece {
                kind: RoadPieceKind::Joint { node_id: network.nodes[n].id },
                class: widest,
                polygon: circle_polygon(center, 0.5 * node_info.max_width, DISK_SIDES),
                hole: None,
                has_sidewalk: false,
                sidewalks: Vec::new(),
            });
        }
    }
    RoadLayout { pieces, skipped_zero_length: skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{Edge, Node};

    fn network(points: &[(f64, f64)], pairs: &[(usize, usize)], class: RoadClass) -> StreetNetwork {
        let nodes = points.iter().enumerate().map(|(i, &(x, y))| Node { id: i as u64, position: Point2::new(x, y) }).collect();
        let edges = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Edge { id: i as u64, a, b, class, width: None })
            .collect();
        StreetNetwork::from_parts(nodes, edges)
    }

    fn star(n: usize, class: RoadClass, angles: &[f64]) -> StreetNetwork {
        let mut pts = vec![(0.0, 0.0)];
        for a in angles.iter().take(n) {
            let r = a.to_radians();
            pts.push((100.0 * r.cos(), 100.0 * r.sin()));
        }
        let pairs: Vec<(usize, usize)> = (1..=n).map(|i| (0, i)).collect();
        network(&pts, &pairs, class)
    }

    #[test]
    fn single_segment_area() {
        let net = network(&[(0.0, 0.0), (100.0, 0.0)], &[(0, 1)], RoadClass::Residential);
        let roads = build_roads(&net);
        assert_eq!(roads.pieces.len(), 1);
        assert!((roads.pieces[0].area() - 800.0).abs() < 1.0);
    }

    #[test]
    fn classification_rules() {
        let right = [0.0, 90.0, 180.0, 270.0];
        assert_eq!(classify_intersection(&star(4, RoadClass::Residential, &right), 0), Some(IntersectionType::Crossing));
        assert_eq!(classify_intersection(&star(3, RoadClass::Residential, &[0.0, 20.0, 200.0]), 0), Some(IntersectionType::Junction));
        let six: Vec<f64> = (0..6).map(|k| 60.0 * k as f64).collect();
        assert_eq!(classify_intersection(&star(6, RoadClass::Primary, &six), 0), Some(IntersectionType::Roundabout));
        let skew = [0.0, 40.0, 180.0, 220.0];
        assert_eq!(classify_intersection(&star(4, RoadClass::Primary, &skew), 0), Some(IntersectionType::Roundabout));
        assert_eq!(classify_intersection(&star(4, RoadClass::Residential, &skew), 0), Some(IntersectionType::Junction));
        assert_eq!(classify_intersection(&star(2, RoadClass::Residential, &right), 0), None);
    }

    #[test]
    fn square_cycle_has_no_intersections() {
        let net = network(&[(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)], &[(0, 1), (1, 2), (2, 3), (3, 0)], RoadClass::Residential);
        let roads = build_roads(&net);
        assert_eq!(roads.segments().count(), 4);
        assert_eq!(roads.intersections().count(), 0);
        // Mitered corners tile the ring exactly: outer 108² minus inner 92².
        let total: f64 = roads.segments().map(RoadPiece::area).sum();
        assert!((total - (108.0f64.powi(2) - 92.0f64.powi(2))).abs() < 1e-6);
    }

    #[test]
    fn grid_counts() {
        let mut pts = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                pts.push((i as f64 * 100.0, j as f64 * 100.0));
            }
        }
        let mut pairs = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                if i < 2 {
                    pairs.push((j * 3 + i, j * 3 + i + 1));
                }
                if j < 2 {
                    pairs.push((j * 3 + i, (j + 1) * 3 + i));
                }
            }
        }
        let roads = build_roads(&network(&pts, &pairs, RoadClass::Residential));
        assert_eq!(roads.segments().count(), 12);
        let kinds: Vec<IntersectionType> = roads.intersections().map(|(_, k)| k).collect();
        assert_eq!(kinds.iter().filter(|&&k| k == IntersectionType::Crossing).count(), 1);
        assert_eq!(kinds.iter().filter(|&&k| k == IntersectionType::Junction).count(), 4);
        assert_eq!(kinds.len(), 5);
    }

    #[test]
    fn sidewalks_sit_inside_the_carriageway() {
        let net = network(&[(0.0, 0.0), (100.0, 0.0)], &[(0, 1)], RoadClass::Primary);
        let roads = build_roads(&net);
        let seg = &roads.pieces[0];
        assert_eq!(seg.sidewalks.len(), 2);
        for s in &seg.sidewalks {
            assert!((s.area() - 150.0).abs() < 1e-9);
            for p in &s.ring {
                assert!(p.y.abs() <= 8.0 + 1e-9);
            }
        }
        let service = build_roads(&network(&[(0.0, 0.0), (100.0, 0.0)], &[(0, 1)], RoadClass::Service));
        assert!(service.pieces[0].sidewalks.is_empty());
    }

    #[test]
    fn roundabout_is_a_ring() {
        let six: Vec<f64> = (0..6).map(|k| 60.0 * k as f64).collect();
        let roads = build_roads(&star(6, RoadClass::Primary, &six));
        let (ring, _) = roads.intersections().next().unwrap();
        let hole = ring.hole.as_ref().unwrap();
        assert!((ring.polygon.bounds().width() / hole.bounds().width() - 2.5).abs() < 1e-9);
        // Segments start at the inner radius.
        for s in roads.segments() {
            let nearest = s.polygon.ring.iter().map(|p| p.length()).fold(f64::INFINITY, f64::min);
            assert!(nearest >= ROUNDABOUT_INNER_RATIO * 16.0 - 1e-9);
        }
    }

    #[test]
    fn sharp_bend_gets_a_joint() {
        let net = network(&[(0.0, 0.0), (100.0, 0.0), (0.0, 5.0)], &[(0, 1), (1, 2)], RoadClass::Residential);
        let roads = build_roads(&net);
        assert_eq!(roads.pieces.iter().filter(|p| matches!(p.kind, RoadPieceKind::Joint { .. })).count(), 1);
    }
}
