//! Poisson-disk tree placement in green lots.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{point_segment_distance, Point2, Polygon};
use crate::layout::{LandUseParams, Lot, LotId};

use super::mesh::TriMesh;

/// Candidates tried around each active sample before it retires.
const ATTEMPTS: usize = 30;
const CROWN_SEGMENTS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Broadleaf,
    Conifer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeInstance {
    pub lot: LotId,
    pub position: Point2,
    pub crown_radius: f64,
    pub height: f64,
    pub base_elevation: f64,
    pub species: Species,
}

/// Bridson dart throwing restricted to the interior of `poly`. Every pair of
/// returned points is at least `r` apart.
pub fn poisson_disk<R: Rng + ?Sized>(poly: &Polygon, r: f64, rng: &mut R) -> Vec<Point2> {
    let area = poly.area();
    if poly.len() < 3 || area <= 0.0 || !(r > 0.0) {
        return Vec::new();
    }
    let b = poly.bounds();
    let cell = r / std::f64::consts::SQRT_2;
    let cols = ((b.width() / cell).floor() as usize) + 1;
    let rows = ((b.height() / cell).floor() as usize) + 1;
    let mut grid: Vec<Option<u32>> = vec![None; cols * rows];
    let cell_of = |p: Point2| {
        let c = (((p.x - b.min.x) / cell) as usize).min(cols - 1);
        let rr = (((p.y - b.min.y) / cell) as usize).min(rows - 1);
        (c, rr)
    };
    let inside = |p: Point2| poly.contains(p) && poly.edges().all(|(a, q)| point_segment_distance(p, a, q) > 0.0);

    let mut points: Vec<Point2> = Vec::new();
    let mut first = None;
    for _ in 0..100 {
        let p = Point2::new(rng.random_range(b.min.x..=b.max.x), rng.random_range(b.min.y..=b.max.y));
        if inside(p) {
            first = Some(p);
            break;
        }
    }
    let Some(first) = first else {
        return points;
    };
    let mut active = vec![0u32];
    points.push(first);
    let (c, rr) = cell_of(first);
    grid[rr * cols + c] = Some(0);

    while !active.is_empty() {
        let k = rng.random_range(0..active.len());
        let center = points[active[k] as usize];
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let rad = (rng.random_range(r * r..4.0 * r * r)).sqrt();
            let ang = rng.random_range(0.0..TAU);
            let p = center + Point2::new(ang.cos(), ang.sin()) * rad;
            if !b.contains(p) || !inside(p) {
                continue;
            }
            let (c, rr) = cell_of(p);
            let mut ok = true;
            'scan: for y in rr.saturating_sub(2)..(rr + 3).min(rows) {
                for x in c.saturating_sub(2)..(c + 3).min(cols) {
                    if let Some(j) = grid[y * cols + x] {
                        let q = points[j as usize];
                        let (dx, dy) = (p.x - q.x, p.y - q.y);
                        if (dx * dx + dy * dy).sqrt() < r {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
            }
            if ok {
                points.push(p);
                let idx = points.len() as u32 - 1;
                grid[rr * cols + c] = Some(idx);
                active.push(idx);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(k);
        }
    }
    points
}

/// Places trees over a green lot with the Poisson radius implied by the
/// land use's tree density. Crowns are kept inside the lot.
pub fn place_trees<R: Rng + ?Sized>(lot: &Lot, params: &LandUseParams, rng: &mut R) -> Vec<TreeInstance> {
    let r = params.tree_radius();
    let points = poisson_disk(&lot.boundary, r, rng);
    points
        .into_iter()
        .map(|position| {
            let species = if rng.random::<f64>() < 0.3 { Species::Conifer } else { Species::Broadleaf };
            let edge_dist = lot
                .boundary
                .edges()
                .map(|(a, b)| point_segment_distance(position, a, b))
                .fold(f64::INFINITY, f64::min);
            let crown_radius = (rng.random_range(0.3..0.5) * r).min(edge_dist);
            let height = match species {
                Species::Broadleaf => rng.random_range(5.0..12.0),
                Species::Conifer => rng.random_range(8.0..16.0),
            };
            TreeInstance { lot: lot.id, position, crown_radius, height, base_elevation: 0.0, species }
        })
        .collect()
}

/// Closed crown shell: a double ring for broadleaf trees, a cone for conifers.
pub fn tree_mesh(tree: &TreeInstance) -> TriMesh {
    let mut m = TriMesh::default();
    let (c, r, h, z0) = (tree.position, tree.crown_radius, tree.height, tree.base_elevation);
    let crown_base = z0 + 0.3 * h;
    let ring = |m: &mut TriMesh, radius: f64, z: f64| -> u32 {
        let first = m.positions.len() as u32;
        for k in 0..CROWN_SEGMENTS {
            let a = TAU * f64::from(k) / f64::from(CROWN_SEGMENTS);
            m.push_vertex([c.x + radius * a.cos(), c.y + radius * a.sin(), z]);
        }
        first
    };
    let n = CROWN_SEGMENTS;
    let bottom = m.push_vertex([c.x, c.y, crown_base]);
    let mut rings = Vec::new();
    match tree.species {
        Species::Broadleaf => {
            let ch = z0 + h - crown_base;
            rings.push(ring(&mut m, r, crown_base + 0.35 * ch));
            rings.push(ring(&mut m, 0.7 * r, crown_base + 0.8 * ch));
        }
        Species::Conifer => rings.push(ring(&mut m, r, crown_base)),
    }
    let top = m.push_vertex([c.x, c.y, z0 + h]);
    let first = rings[0];
    for k in 0..n {
        m.triangles.push([bottom, first + (k + 1) % n, first + k]);
    }
    for w in rings.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for k in 0..n {
            let j = (k + 1) % n;
            m.triangles.push([lo + k, lo + j, hi + j]);
            m.triangles.push([lo + k, hi + j, hi + k]);
        }
    }
    let last = *rings.last().unwrap();
    for k in 0..n {
        m.triangles.push([last + k, last + (k + 1) % n, top]);
    }
    m
}
