//! Bounding-volume hierarchy over the scene triangles, built with binned
//! surface-area splits.

use crate::scenegen::{Mesh, Vec3};

use super::vec::{cross, dot, sub};

const LEAF_SIZE: usize = 4;
const MAX_LEAF: usize = 16;
const BINS: usize = 12;
/// Barycentric slack that closes cracks along shared edges.
const EDGE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] };

    fn grow(&mut self, p: Vec3) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    fn union(&mut self, o: &Aabb) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(o.min[k]);
            self.max[k] = self.max[k].max(o.max[k]);
        }
    }

    fn area(&self) -> f64 {
        let d = sub(self.max, self.min);
        if d.iter().any(|&x| x < 0.0) {
            return 0.0;
        }
        2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0])
    }

    /// Entry distance of the ray, if it meets the box before `tmax`.
    #[inline]
    fn hit(&self, o: Vec3, inv: Vec3, tmax: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = tmax;
        for k in 0..3 {
            let a = (self.min[k] - o[k]) * inv[k];
            let b = (self.max[k] - o[k]) * inv[k];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo > t0 {
                t0 = lo;
            }
            if hi < t1 {
                t1 = hi;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle. Interior: index of the left child; the right
    /// child follows it.
    first: u32,
    /// Triangle count; zero for interior nodes.
    count: u32,
}

#[derive(Clone, Copy, Debug)]
struct PreTri {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    /// Index into the scene mesh triangles.
    pub triangle: u32,
}

#[derive(Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<PreTri>,
    ids: Vec<u32>,
}

struct Builder<'a> {
    bounds: &'a [Aabb],
    centroids: &'a [Vec3],
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn build(&mut self, node: usize, start: usize, end: usize) {
        let mut bounds = Aabb::EMPTY;
        let mut cb = Aabb::EMPTY;
        for &i in &self.order[start..end] {
            bounds.union(&self.bounds[i as usize]);
            cb.grow(self.centroids[i as usize]);
        }
        self.nodes[node] = Node { bounds, first: start as u32, count: (end - start) as u32 };
        let n = end - start;
        if n <= LEAF_SIZE {
            return;
        }

        let mut best: Option<(f64, usize, f64)> = None;
        for axis in 0..3 {
            let lo = cb.min[axis];
            let extent = cb.max[axis] - lo;
            if !(extent > 0.0) {
                continue;
            }
            let bin_of = |c: f64| (((c - lo) / extent * BINS as f64) as usize).min(BINS - 1);
            let mut counts = [0usize; BINS];
            let mut boxes = [Aabb::EMPTY; BINS];
            for &i in &self.order[start..end] {
                let b = bin_of(self.centroids[i as usize][axis]);
                counts[b] += 1;
                boxes[b].union(&self.bounds[i as usize]);
            }
            let mut right_area = [0.0; BINS];
            let mut right_count = [0usize; BINS];
            let mut acc = Aabb::EMPTY;
            let mut cnt = 0;
            for b in (1..BINS).rev() {
                acc.union(&boxes[b]);
                cnt += counts[b];
                right_area[b] = acc.area();
                right_count[b] = cnt;
            }
            let mut acc = Aabb::EMPTY;
            let mut cnt = 0;
            for b in 0..BINS - 1 {
                acc.union(&boxes[b]);
                cnt += counts[b];
                if cnt == 0 || right_count[b + 1] == 0 {
                    continue;
                }
                let cost = acc.area() * cnt as f64 + right_area[b + 1] * right_count[b + 1] as f64;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, axis, lo + extent * (b + 1) as f64 / BINS as f64));
                }
            }
        }

        let area = bounds.area();
        let mid = match best {
            Some((cost, axis, plane)) => {
                if n <= MAX_LEAF && area > 0.0 && 1.0 + cost / area >= n as f64 {
                    return;
                }
                let slice = &mut self.order[start..end];
                let mut i = 0;
                for j in 0..slice.len() {
                    if self.centroids[slice[j] as usize][axis] < plane {
                        slice.swap(i, j);
                        i += 1;
                    }
                }
                start + i
            }
            None => start + n / 2,
        };
        let mid = if mid == start || mid == end { start + n / 2 } else { mid };

        let left = self.nodes.len();
        self.nodes.push(self.nodes[node]);
        self.nodes.push(self.nodes[node]);
        self.nodes[node].first = left as u32;
        self.nodes[node].count = 0;
        self.build(left, start, mid);
        self.build(left + 1, mid, end);
    }
}

impl Bvh {
    pub fn build(mesh: &Mesh) -> Bvh {
        let pre: Vec<PreTri> = mesh
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.v.map(|i| mesh.positions[i as usize]);
                PreTri { v0: a, e1: sub(b, a), e2: sub(c, a) }
            })
            .collect();
        let bounds: Vec<Aabb> = mesh
            .triangles
            .iter()
            .map(|t| {
                let mut b = Aabb::EMPTY;
                for i in t.v {
                    b.grow(mesh.positions[i as usize]);
                }
                b
            })
            .collect();
        let centroids: Vec<Vec3> = bounds.iter().map(|b| [0.5 * (b.min[0] + b.max[0]), 0.5 * (b.min[1] + b.max[1]), 0.5 * (b.min[2] + b.max[2])]).collect();
        let n = pre.len();
        let mut builder = Builder {
            bounds: &bounds,
            centroids: &centroids,
            order: (0..n as u32).collect(),
            nodes: vec![Node { bounds: Aabb::EMPTY, first: 0, count: 0 }],
        };
        if n > 0 {
            builder.build(0, 0, n);
        }
        let order = builder.order;
        Bvh { nodes: builder.nodes, tris: order.iter().map(|&i| pre[i as usize]).collect(), ids: order }
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    #[inline]
    fn intersect_tri(tri: &PreTri, o: Vec3, d: Vec3, tmax: f64) -> Option<f64> {
        let p = cross(d, tri.e2);
        let det = dot(tri.e1, p);
        if det.abs() < 1e-14 {
            return None;
        }
        let inv = 1.0 / det;
        let s = sub(o, tri.v0);
        let u = dot(s, p) * inv;
        if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
            return None;
        }
        let q = cross(s, tri.e1);
        let v = dot(d, q) * inv;
        if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
            return None;
        }
        let t = dot(tri.e2, q) * inv;
        (t > 0.0 && t < tmax).then_some(t)
    }

    fn traverse(&self, o: Vec3, d: Vec3, tmax: f64, any: bool) -> Option<Hit> {
        if self.tris.is_empty() {
            return None;
        }
        let inv = d.map(|c| 1.0 / c);
        let mut best: Option<Hit> = None;
        let mut tbest = tmax;
        let mut stack = [0u32; 64];
        let mut sp = 0;
        if self.nodes[0].bounds.hit(o, inv, tbest).is_none() {
            return None;
        }
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.count > 0 {
                for k in n.first..n.first + n.count {
                    if let Some(t) = Self::intersect_tri(&self.tris[k as usize], o, d, tbest) {
                        tbest = t;
                        best = Some(Hit { t, triangle: self.ids[k as usize] });
                        if any {
                            return best;
                        }
                    }
                }
            } else {
                let (l, r) = (n.first as usize, n.first as usize + 1);
                let tl = self.nodes[l].bounds.hit(o, inv, tbest);
                let tr = self.nodes[r].bounds.hit(o, inv, tbest);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (l, r) } else { (r, l) };
                        if sp < stack.len() {
                            stack[sp] = far as u32;
                            sp += 1;
                        }
                        node = near;
                        continue;
                    }
                    (Some(_), None) => {
                        node = l;
                        continue;
                    }
                    (None, Some(_)) => {
                        node = r;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            if sp == 0 {
                return best;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
    }

    /// Nearest triangle along the ray.
    pub fn closest(&self, o: Vec3, d: Vec3) -> Option<Hit> {
        self.traverse(o, d, f64::INFINITY, false)
    }

    /// Whether anything lies along the ray.
    pub fn occluded(&self, o: Vec3, d: Vec3) -> bool {
        self.traverse(o, d, f64::INFINITY, true).is_some()
    }
}
