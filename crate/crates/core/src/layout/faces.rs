//! Planar face extraction over the street graph.

use std::collections::{BTreeSet, HashMap};

use crate::geodata::{infer_land_use, Edge, Node, StreetNetwork};
use crate::geom::{inset, point_segment_distance, proper_crossing, Bounds2, Point2, Polygon};

use super::{LayoutError, Plot};

/// Distance below which a node is considered to lie on an edge.
const ON_EDGE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanarizeReport {
    /// Nodes created at proper edge crossings.
    pub inserted_nodes: usize,
    /// Edges split at an existing node lying on their interior.
    pub t_junction_splits: usize,
    /// Duplicate pieces dropped after splitting overlapping edges.
    pub dropped_duplicates: usize,
}

/// Makes the network planar: crossing edges are split at a new shared node
/// and edges passing through an existing node are split there. Split pieces
/// keep the class and width of their source; the first piece keeps its id.
pub fn planarize(network: &StreetNetwork) -> (StreetNetwork, PlanarizeReport) {
    let mut report = PlanarizeReport::default();
    let mut nodes: Vec<Node> = network.nodes.clone();
    let mut next_node_id = network.max_node_id() + 1;
    let edges = &network.edges;
    let seg = |e: &Edge| (network.nodes[e.a].position, network.nodes[e.b].position);

    let boxes: Vec<Bounds2> = edges
        .iter()
        .map(|e| {
            let (a, b) = seg(e);
            Bounds2::from_points(&[a, b]).expanded(ON_EDGE_TOLERANCE)
        })
        .collect();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&i, &j| boxes[i].min.x.total_cmp(&boxes[j].min.x).then(i.cmp(&j)));

    // (parameter along edge, node index)
    let mut splits: Vec<Vec<(f64, usize)>> = vec![Vec::new(); edges.len()];
    let mut crossing_nodes: Vec<usize> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j].min.x > boxes[i].max.x {
                break;
            }
            if !boxes[i].intersects(&boxes[j]) {
                continue;
            }
            let (ei, ej) = (&edges[i], &edges[j]);
            if ei.a == ej.a || ei.a == ej.b || ei.b == ej.a || ei.b == ej.b {
                continue;
            }
            let (a, b) = seg(ei);
            let (c, d) = seg(ej);
            if let Some((t, u)) = proper_crossing(a, b, c, d) {
                let p = a + (b - a) * t;
                let existing = crossing_nodes
                    .iter()
                    .copied()
                    .find(|&n| nodes[n].position.distance(p) <= ON_EDGE_TOLERANCE);
                let idx = match existing {
                    Some(n) => n,
                    None => {
                        nodes.push(Node { id: next_node_id, position: p });
                        next_node_id += 1;
                        report.inserted_nodes += 1;
                        crossing_nodes.push(nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                splits[i].push((t, idx));
                splits[j].push((u, idx));
            }
        }
    }

    // Original nodes lying on edge interiors.
    let mut node_order: Vec<usize> = (0..network.nodes.len()).collect();
    node_order.sort_by(|&i, &j| network.nodes[i].position.x.total_cmp(&network.nodes[j].position.x));
    let xs: Vec<f64> = node_order.iter().map(|&i| network.nodes[i].position.x).collect();
    for (i, e) in edges.iter().enumerate() {
        let (a, b) = seg(e);
        let lo = xs.partition_point(|&x| x < boxes[i].min.x);
        for &n in &node_order[lo..] {
            let p = network.nodes[n].position;
            if p.x > boxes[i].max.x {
                break;
            }
            if n == e.a || n == e.b || !boxes[i].contains(p) {
                continue;
            }
            if point_segment_distance(p, a, b) <= ON_EDGE_TOLERANCE {
                let ab = b - a;
                let t = (p - a).dot(ab) / ab.dot(ab);
                if t > 0.0 && t < 1.0 {
                    splits[i].push((t, n));
                    report.t_junction_splits += 1;
                }
            }
        }
    }

    let mut next_edge_id = network.max_edge_id() + 1;
    let mut out_edges: Vec<Edge> = Vec::with_capacity(edges.len());
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, e) in edges.iter().enumerate() {
        let mut cuts = std::mem::take(&mut splits[i]);
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut chain = vec![e.a];
        chain.extend(cuts.iter().map(|c| c.1));
        chain.push(e.b);
        chain.dedup();
        for (k, w) in chain.windows(2).enumerate() {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            if w[0] == w[1] || !seen.insert(key) {
                report.dropped_duplicates += 1;
                continue;
            }
            let id = if k == 0 {
                e.id
            } else {
                next_edge_id += 1;
                next_edge_id - 1
            };
            out_edges.push(Edge { id, a: w[0], b: w[1], class: e.class, width: e.width });
        }
    }
    (StreetNetwork::from_parts(nodes, out_edges), report)
}

/// Bounded face of a planar street graph. `edge_ids[k]` is the street edge
/// running from `boundary.ring[k]` to the next ring vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub boundary: Polygon,
    pub edge_ids: Vec<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaceReport {
    /// Faces whose boundary still uses some edge on both sides after
    /// dangling edges are pruned (e.g. a courtyard joined by a single street).
    pub irregular_faces: usize,
    /// Dangling edges removed from face boundaries.
    pub pruned_spikes: usize,
}

/// Traces the bounded faces of a planar network with a half-edge structure.
/// Half-edge `2e` runs `a → b` along edge `e`, `2e + 1` runs back.
pub fn bounded_faces(network: &StreetNetwork) -> (Vec<Face>, FaceReport) {
    let mut report = FaceReport::default();
    let pos = |n: usize| network.nodes[n].position;
    let h_count = network.edges.len() * 2;
    let origin = |h: usize| {
        let e = &network.edges[h / 2];
        if h.is_multiple_of(2) {
            e.a
        } else {
            e.b
        }
    };
    let target = |h: usize| origin(h ^ 1);

    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); network.nodes.len()];
    for h in 0..h_count {
        outgoing[origin(h)].push(h);
    }
    let mut slot = vec![0usize; h_count];
    for list in outgoing.iter_mut() {
        list.sort_by(|&x, &y| {
            let dx = pos(target(x)) - pos(origin(x));
            let dy = pos(target(y)) - pos(origin(y));
            dx.y.atan2(dx.x).total_cmp(&dy.y.atan2(dy.x)).then(x.cmp(&y))
        });
        for (k, &h) in list.iter().enumerate() {
            slot[h] = k;
        }
    }
    // Arriving along u→v, leave v along the first edge clockwise from v→u.
    let next = |h: usize| {
        let twin = h ^ 1;
        let list = &outgoing[origin(twin)];
        list[(slot[twin] + list.len() - 1) % list.len()]
    };

    let mut visited = vec![false; h_count];
    let mut faces = Vec::new();
    for start in 0..h_count {
        if visited[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut h = start;
        while !visited[h] {
            visited[h] = true;
            cycle.push(h);
            h = next(h);
        }
        let ring: Vec<Point2> = cycle.iter().map(|&h| pos(origin(h))).collect();
        if crate::geom::signed_area(&ring) <= 0.0 {
            continue;
        }

        // Prune dangling edges: a half-edge immediately followed by its twin.
        let mut stack: Vec<usize> = Vec::with_capacity(cycle.len());
        for &h in &cycle {
            if stack.last() == Some(&(h ^ 1)) {
                stack.pop();
                report.pruned_spikes += 1;
            } else {
                stack.push(h);
            }
        }
        while stack.len() >= 2 && stack[0] == (stack[stack.len() - 1] ^ 1) {
            stack.pop();
            stack.remove(0);
            report.pruned_spikes += 1;
        }
        // Nothing left: the walk went around a tree, whose rounding noise gave
        // it a positive area. That is the outer face, not a bounded one.
        if stack.is_empty() {
            continue;
        }
        let edges_used: BTreeSet<usize> = stack.iter().map(|h| h / 2).collect();
        if stack.len() < 3 || edges_used.len() != stack.len() {
            report.irregular_faces += 1;
            continue;
        }
        faces.push(Face {
            boundary: Polygon::from_ring_unchecked(stack.iter().map(|&h| pos(origin(h))).collect()),
            edge_ids: stack.iter().map(|&h| network.edges[h / 2].id).collect(),
        });
    }
    (faces, report)
}

#[derive(Clone, Debug)]
pub struct PlotExtraction {
    pub plots: Vec<Plot>,
    /// The planarized network the plots were traced on.
    pub network: StreetNetwork,
    pub planarize: PlanarizeReport,
    pub faces: FaceReport,
    /// Faces that vanished under the road half-width inset.
    pub collapsed_plots: usize,
    /// Plots with no classed bounding edge, defaulted to residential.
    pub unclassified_plots: usize,
}

/// Extracts one plot per bounded face, inset by half the width of each
/// bounding road, with land use inferred from the bounding road classes.
pub fn extract_plots(network: &StreetNetwork) -> Result<PlotExtraction, LayoutError> {
    if network.edges.is_empty() {
        return Err(LayoutError::EmptyNetwork);
    }
    let (planar, planarize_report) = planarize(network);
    if planarize_report.inserted_nodes > 0 {
        log::warn!("planarized street network: inserted {} crossing nodes", planarize_report.inserted_nodes);
    }
    let (faces, face_report) = bounded_faces(&planar);
    if face_report.irregular_faces > 0 {
        log::warn!("dropped {} irregular faces", face_report.irregular_faces);
    }
    let widths: HashMap<u64, f64> = planar.edges.iter().map(|e| (e.id, e.width())).collect();

    let mut plots = Vec::new();
    let mut collapsed = 0;
    let mut unclassified = 0;
    for face in faces {
        let distances: Vec<f64> = face.edge_ids.iter().map(|id| 0.5 * widths[id]).collect();
        let Some(boundary) = inset(&face.boundary, &distances) else {
            collapsed += 1;
            continue;
        };
        let boundary = boundary.without_collinear();
        let mut ids = face.edge_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        let inference = infer_land_use(&planar, &ids);
        if inference.unclassified {
            unclassified += 1;
        }
        plots.push(Plot {
            id: plots.len() as u32,
            face: face.boundary,
            boundary,
            land_use: inference.land_use,
            bounding_edge_ids: ids,
        });
    }
    Ok(PlotExtraction {
        plots,
        network: planar,
        planarize: planarize_report,
        faces: face_report,
        collapsed_plots: collapsed,
        unclassified_plots: unclassified,
    })
}
