//! Indexed triangle meshes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::class::SemanticClass;
use crate::geom::{triangulate, Bounds2, Polygon};

pub type Vec3 = [f64; 3];

/// Untagged indexed mesh used while building single objects.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn push_vertex(&mut self, p: Vec3) -> u32 {
        self.positions.push(p);
        self.positions.len() as u32 - 1
    }

    /// Appends another mesh, returning the index offset of its vertices.
    pub fn append(&mut self, other: &TriMesh) -> u32 {
        let base = self.positions.len() as u32;
        self.positions.extend_from_slice(&other.positions);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        base
    }

    /// Signed volume by the divergence theorem; positive for outward winding.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.positions[i as usize]);
                (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]))
                    / 6.0
            })
            .sum()
    }

    /// Closed and consistently oriented: every directed edge appears exactly
    /// once and its reverse exactly once.
    pub fn is_watertight(&self) -> bool {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return false;
            }
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Flat polygon at height `z`, facing up.
    pub fn flat_polygon(poly: &Polygon, z: f64) -> TriMesh {
        TriMesh {
            positions: poly.ring.iter().map(|p| [p.x, p.y, z]).collect(),
            triangles: triangulate(poly).into_iter().map(|t| t.map(|i| i as u32)).collect(),
        }
    }

    /// Splits every triangle `levels` times into four. Adjacent triangles
    /// split consistently, so shared edges stay crack-free.
    pub fn subdivided(&self, levels: u32) -> TriMesh {
        let mut mesh = self.clone();
        for _ in 0..levels {
            let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
            let mut out = TriMesh { positions: mesh.positions.clone(), triangles: Vec::with_capacity(mesh.triangles.len() * 4) };
            let mut midpoint = |a: u32, b: u32, out: &mut TriMesh| -> u32 {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    let (pa, pb) = (out.positions[a as usize], out.positions[b as usize]);
                    out.push_vertex([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])])
                })
            };
            for t in &mesh.triangles {
                let [a, b, c] = *t;
                let ab = midpoint(a, b, &mut out);
                let bc = midpoint(b, c, &mut out);
                let ca = midpoint(c, a, &mut out);
                out.triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            }
            mesh = out;
        }
        mesh
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut m: f64 = 0.0;
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (self.positions[t[k] as usize], self.positions[t[(k + 1) % 3] as usize]);
                m = m.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        m
    }
}

/// Triangle of the scene mesh with its semantic class and material instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub v: [u32; 3],
    pub class: SemanticClass,
    pub material: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<Triangle>,
}

impl Mesh {
    pub fn add(&mut self, part: &TriMesh, class: SemanticClass, material: u32) {
        let base = self.positions.len() as u32;
        self.positions.extend_from_slice(&part.positions);
        self.triangles.extend(part.triangles.iter().map(|t| Triangle { v: t.map(|i| i + base), class, material }));
    }

    pub fn class_histogram(&self) -> [usize; 4] {
        let mut h = [0; 4];
        for t in &self.triangles {
            h[t.class.id() as usize] += 1;
        }
        h
    }

    pub fn bounds_xy(&self) -> Bounds2 {
        let mut b = Bounds2::empty();
        for p in &self.positions {
            b.include(crate::geom::Point2::new(p[0], p[1]));
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;

    #[test]
    fn subdivision_keeps_area_and_shares_edges() {
        let poly = Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(4.0, 2.0));
        let m = TriMesh::flat_polygon(&poly, 0.0).subdivided(2);
        assert_eq!(m.triangles.len(), 2 * 16);
        let area: f64 = m
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| m.positions[i as usize]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            })
            .sum();
        assert!((area - 8.0).abs() < 1e-12);
        // Interior edges are shared by exactly two triangles.
        let mut count: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        assert!(count.values().all(|&n| n <= 2));
        assert_eq!(count.values().filter(|&&n| n == 1).count(), 16);
    }
}
