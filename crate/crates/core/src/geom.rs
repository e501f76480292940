//! Planar geometry primitives shared by layout and scene generation.
//!
//! Polygons are stored as open rings (no repeated closing vertex). Most
//! operations expect counter-clockwise orientation; `Polygon::new`
//! normalizes to it.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).length()
    }

    pub fn normalized(self) -> Point2 {
        let len = self.length();
        Point2::new(self.x / len, self.y / len)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds2 {
    pub fn empty() -> Self {
        Self {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.include(*p);
        }
        b
    }

    pub fn include(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn is_empty(&self) -> bool {
        !(self.min.x <= self.max.x && self.min.y <= self.max.y)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            min: Point2::new(self.min.x - margin, self.min.y - margin),
            max: Point2::new(self.max.x + margin, self.max.y + margin),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, o: &Bounds2) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

/// Simple polygon as an open counter-clockwise ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub ring: Vec<Point2>,
}

impl Polygon {
    /// Builds a polygon, dropping repeated vertices and a closing duplicate,
    /// and reorients it counter-clockwise.
    pub fn new(points: Vec<Point2>) -> Self {
        let mut ring = dedup_ring(points);
        if signed_area(&ring) < 0.0 {
            ring.reverse();
        }
        Self { ring }
    }

    /// Builds a polygon without reorienting or cleaning the ring.
    pub fn from_ring_unchecked(ring: Vec<Point2>) -> Self {
        Self { ring }
    }

    pub fn rectangle(min: Point2, max: Point2) -> Self {
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.ring)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn bounds(&self) -> Bounds2 {
        Bounds2::from_points(&self.ring)
    }

    /// Iterates `(start, end)` of every edge, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.ring.len();
        (0..n).map(move |i| (self.ring[i], self.ring[(i + 1) % n]))
    }

    /// Area centroid. Falls back to the vertex mean for degenerate rings.
    pub fn centroid(&self) -> Point2 {
        let n = self.ring.len();
        if n == 0 {
            return Point2::default();
        }
        let origin = self.ring[0];
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let p = self.ring[i] - origin;
            let q = self.ring[(i + 1) % n] - origin;
            let c = p.cross(q);
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        if a2.abs() < 1e-12 {
            let sum = self.ring.iter().fold(Point2::default(), |acc, p| acc + *p);
            return sum * (1.0 / n as f64);
        }
        Point2::new(origin.x + cx / (3.0 * a2), origin.y + cy / (3.0 * a2))
    }

    /// Even-odd point-in-polygon test. Boundary points may go either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        let n = self.ring.len();
        let mut j = n.wrapping_sub(1);
        for i in 0..n {
            let a = self.ring[i];
            let b = self.ring[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Inside and at least `margin` away from every edge.
    pub fn contains_with_margin(&self, p: Point2, margin: f64) -> bool {
        self.contains(p) && self.edges().all(|(a, b)| point_segment_distance(p, a, b) > margin)
    }

    /// No two non-adjacent edges touch and no two adjacent edges fold back.
    pub fn is_simple(&self) -> bool {
        let n = self.ring.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let (a, b) = (self.ring[i], self.ring[(i + 1) % n]);
            if a == b {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (self.ring[j], self.ring[(j + 1) % n]);
                if adjacent {
                    // Adjacent edges share one vertex; they may only overlap if collinear and folding back.
                    let shared_is_b = j == i + 1;
                    let (pivot, u, v) = if shared_is_b { (b, a, d) } else { (a, b, c) };
                    let du = u - pivot;
                    let dv = v - pivot;
                    if du.cross(dv).abs() <= 1e-12 * du.length() * dv.length() && du.dot(dv) > 0.0 {
                        return false;
                    }
                    continue;
                }
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest interior angle in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let n = self.ring.len();
        let mut min = 180.0_f64;
        for i in 0..n {
            let prev = self.ring[(i + n - 1) % n];
            let cur = self.ring[i];
            let next = self.ring[(i + 1) % n];
            let a = prev - cur;
            let b = next - cur;
            let mut ang = b.cross(a).atan2(b.dot(a)).to_degrees();
            if ang < 0.0 {
                ang += 360.0;
            }
            min = min.min(ang);
        }
        min
    }

    pub fn translated(&self, d: Point2) -> Polygon {
        Polygon::from_ring_unchecked(self.ring.iter().map(|p| *p + d).collect())
    }

    /// Drops vertices whose neighbors are collinear with them.
    pub fn without_collinear(&self) -> Polygon {
        let mut ring = self.ring.clone();
        let mut changed = true;
        while changed && ring.len() > 3 {
            changed = false;
            let n = ring.len();
            for i in 0..n {
                let prev = ring[(i + n - 1) % n];
                let cur = ring[i];
                let next = ring[(i + 1) % n];
                let a = cur - prev;
                let b = next - cur;
                let scale = a.length() * b.length();
                if scale == 0.0 || (a.cross(b).abs() <= 1e-10 * scale && a.dot(b) > 0.0) {
                    ring.remove(i);
                    changed = true;
                    break;
                }
            }
        }
        Polygon::from_ring_unchecked(ring)
    }
}

pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let origin = ring[0];
    let mut acc = 0.0;
    for i in 1..n - 1 {
        acc += (ring[i] - origin).cross(ring[i + 1] - origin);
    }
    acc * 0.5
}

fn dedup_ring(points: Vec<Point2>) -> Vec<Point2> {
    let mut ring: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        if ring.last() != Some(&p) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Parameters `(t, u)` of a proper crossing of `a→b` and `c→d`, both strictly
/// inside `(0, 1)`.
pub fn proper_crossing(a: Point2, b: Point2, c: Point2, d: Point2) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() <= 1e-15 * r.length() * s.length() {
        return None;
    }
    let qp = c - a;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    const EPS: f64 = 1e-9;
    if t > EPS && t < 1.0 - EPS && u > EPS && u < 1.0 - EPS {
        Some((t, u))
    } else {
        None
    }
}

/// Intersection of two infinite lines given as point + direction.
pub fn line_intersection(p: Point2, dp: Point2, q: Point2, dq: Point2) -> Option<Point2> {
    let denom = dp.cross(dq);
    if denom.abs() <= 1e-12 * dp.length() * dq.length() {
        return None;
    }
    let t = (q - p).cross(dq) / denom;
    Some(p + dp * t)
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, no collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area oriented bounding rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Point2,
    /// Unit vector along the long side.
    pub major: Point2,
    pub half_major: f64,
    pub half_minor: f64,
}

impl OrientedBox {
    pub fn minor(&self) -> Point2 {
        self.major.perp()
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_major * self.half_minor
    }
}

/// Rotating-calipers style search over hull edge directions.
pub fn oriented_box(points: &[Point2]) -> Option<OrientedBox> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return None;
    }
    let mut best: Option<OrientedBox> = None;
    let n = hull.len();
    for i in 0..n {
        let dir = hull[(i + 1) % n] - hull[i];
        if dir.length() == 0.0 {
            continue;
        }
        let u = dir.normalized();
        let v = u.perp();
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let pu = p.dot(u);
            let pv = p.dot(v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.is_none_or(|b| area < b.area() - 1e-12 * area.abs()) {
            let center = u * (0.5 * (umin + umax)) + v * (0.5 * (vmin + vmax));
            let (major, half_major, half_minor) = if umax - umin >= vmax - vmin {
                (u, 0.5 * (umax - umin), 0.5 * (vmax - vmin))
            } else {
                (v, 0.5 * (vmax - vmin), 0.5 * (umax - umin))
            };
            best = Some(OrientedBox { center, major, half_major, half_minor });
        }
    }
    best
}

/// Splits a simple polygon by the infinite line through `origin` along
/// `dir`. Returns the pieces on both sides; a polygon the line misses comes
/// back unchanged as a single piece.
///
/// Chord endpoints are shared bit-for-bit between the two pieces on either
/// side of a chord, which `merge_along_shared_edge` relies on.
pub fn split_by_line(poly: &Polygon, origin: Point2, dir: Point2) -> Vec<Polygon> {
    #[derive(Clone, Copy)]
    struct Node {
        p: Point2,
        crossing: bool,
    }

    let ring = &poly.ring;
    let n = ring.len();
    if n < 3 {
        return vec![poly.clone()];
    }
    let side: Vec<f64> = ring.iter().map(|p| dir.cross(*p - origin)).collect();
    // Points on the line count as left; this is a consistent symbolic perturbation.
    let left = |s: f64| s >= 0.0;

    let mut nodes: Vec<Node> = Vec::with_capacity(n + 4);
    for i in 0..n {
        let j = (i + 1) % n;
        nodes.push(Node { p: ring[i], crossing: false });
        if left(side[i]) != left(side[j]) {
            let t = side[i] / (side[i] - side[j]);
            let p = ring[i] + (ring[j] - ring[i]) * t;
            nodes.push(Node { p, crossing: true });
        }
    }

    let mut crossings: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].crossing).collect();
    if crossings.is_empty() {
        return vec![poly.clone()];
    }
    debug_assert!(crossings.len().is_multiple_of(2));
    crossings.sort_by(|&a, &b| {
        let ua = (nodes[a].p - origin).dot(dir);
        let ub = (nodes[b].p - origin).dot(dir);
        ua.total_cmp(&ub).then(a.cmp(&b))
    });
    let mut partner = vec![usize::MAX; nodes.len()];
    for pair in crossings.chunks(2) {
        if let [a, b] = *pair {
            partner[a] = b;
            partner[b] = a;
        }
    }

    let m = nodes.len();
    let mut visited = vec![false; m];
    let mut pieces = Vec::new();
    for start in 0..m {
        if nodes[start].crossing || visited[start] {
            continue;
        }
        let mut piece = Vec::new();
        let mut cur = start;
        let mut guard = 0;
        loop {
            piece.push(nodes[cur].p);
            if nodes[cur].crossing {
                let other = partner[cur];
                piece.push(nodes[other].p);
                cur = (other + 1) % m;
            } else {
                visited[cur] = true;
                cur = (cur + 1) % m;
            }
            if cur == start {
                break;
            }
            guard += 1;
            if guard > 4 * m {
                // Inconsistent pairing can only come from a non-simple input.
                return vec![poly.clone()];
            }
        }
        let ring = dedup_ring(piece);
        if ring.len() >= 3 && signed_area(&ring) > 1e-12 * poly.area().max(1.0) {
            pieces.push(Polygon::from_ring_unchecked(ring));
        }
    }
    pieces
}

/// Unions two polygons that share one edge traversed in opposite
/// directions (exact vertex equality). Returns `None` when no such edge
/// exists.
pub fn merge_along_shared_edge(p: &Polygon, q: &Polygon) -> Option<Polygon> {
    let (np, nq) = (p.ring.len(), q.ring.len());
    for i in 0..np {
        let a = p.ring[i];
        let b = p.ring[(i + 1) % np];
        for j in 0..nq {
            if q.ring[j] == b && q.ring[(j + 1) % nq] == a {
                let mut ring = Vec::with_capacity(np + nq - 2);
                for k in 0..np {
                    ring.push(p.ring[(i + 1 + k) % np]);
                }
                for k in 0..nq.saturating_sub(2) {
                    ring.push(q.ring[(j + 2 + k) % nq]);
                }
                let merged = Polygon::from_ring_unchecked(dedup_ring(ring));
                return Some(merged.without_collinear());
            }
        }
    }
    None
}

/// Offsets every edge of a counter-clockwise polygon inward by its own
/// distance. Edges that collapse are removed and their neighbors re-joined.
/// Returns `None` when nothing simple with positive area survives.
pub fn inset(poly: &Polygon, distances: &[f64]) -> Option<Polygon> {
    struct Line {
        start: Point2,
        dir: Point2,
        dist: f64,
    }
    impl Line {
        fn base(&self) -> Point2 {
            self.start + self.dir.perp() * self.dist
        }
    }

    let n = poly.ring.len();
    assert_eq!(n, distances.len(), "one offset distance per edge");
    if n < 3 {
        return None;
    }
    let mut lines: Vec<Line> = Vec::with_capacity(n);
    for i in 0..n {
        let a = poly.ring[i];
        let d = poly.ring[(i + 1) % n] - a;
        if d.length() == 0.0 {
            continue;
        }
        lines.push(Line { start: a, dir: d.normalized(), dist: distances[i] });
    }

    loop {
        let m = lines.len();
        if m < 3 {
            return None;
        }
        // Join points between line k-1 and line k; parallel neighbors get a step.
        let joins: Vec<Vec<Point2>> = (0..m)
            .map(|k| {
                let prev = &lines[(k + m - 1) % m];
                let cur = &lines[k];
                match line_intersection(prev.base(), prev.dir, cur.base(), cur.dir) {
                    Some(v) => vec![v],
                    None => vec![cur.start + prev.dir.perp() * prev.dist, cur.base()],
                }
            })
            .collect();
        let collapsed = (0..m).find(|&k| {
            let from = *joins[k].last().unwrap();
            let to = joins[(k + 1) % m][0];
            (to - from).dot(lines[k].dir) <= 0.0
        });
        match collapsed {
            Some(k) => {
                lines.remove(k);
            }
            None => {
                let verts: Vec<Point2> = joins.into_iter().flatten().collect();
                let out = Polygon::from_ring_unchecked(dedup_ring(verts));
                if out.ring.len() >= 3 && out.signed_area() > 0.0 && out.is_simple() {
                    return Some(out);
                }
                return None;
            }
        }
    }
}

/// Uniform inward offset.
pub fn inset_uniform(poly: &Polygon, distance: f64) -> Option<Polygon> {
    inset(poly, &vec![distance; poly.ring.len()])
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
/// Returns index triples into the ring.
pub fn triangulate(poly: &Polygon) -> Vec<[usize; 3]> {
    let n = poly.ring.len();
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    if n < 3 {
        return out;
    }
    let pts = &poly.ring;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut guard = 0usize;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && point_in_triangle_closed(pts[j], a, b, c)
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Numerically degenerate remainder: fan it so area is still covered.
            guard += 1;
            if guard > 1 {
                for k in 1..idx.len() - 1 {
                    out.push([idx[0], idx[k], idx[k + 1]]);
                }
                return out;
            }
            // Remove a collinear vertex if there is one and retry.
            let m = idx.len();
            if let Some(k) = (0..m).find(|&k| {
                let (a, b, c) = (pts[idx[(k + m - 1) % m]], pts[idx[k]], pts[idx[(k + 1) % m]]);
                orient(a, b, c).abs() <= 1e-12 * (b - a).length() * (c - b).length()
            }) {
                idx.remove(k);
                guard = 0;
            }
        }
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

fn point_in_triangle_closed(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Regular polygon approximating a circle, circumscribed so the true disk is covered.
pub fn circle_polygon(center: Point2, radius: f64, sides: usize) -> Polygon {
    let r = radius / (std::f64::consts::PI / sides as f64).cos();
    let ring = (0..sides)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / sides as f64;
            center + Point2::new(a.cos(), a.sin()) * r
        })
        .collect();
    Polygon::from_ring_unchecked(ring)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: f64, h: f64) -> Polygon {
        Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(w, h))
    }

    #[test]
    fn area_and_orientation() {
        let cw = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 2.0),
            Point2::new(3.0, 2.0),
            Point2::new(3.0, 0.0),
        ]);
        assert!(cw.signed_area() > 0.0);
        assert_eq!(cw.area(), 6.0);
        assert_eq!(cw.centroid(), Point2::new(1.5, 1.0));
    }

    #[test]
    fn split_rectangle_in_two() {
        let r = rect(100.0, 40.0);
        let pieces = split_by_line(&r, Point2::new(37.0, 0.0), Point2::new(0.0, 1.0));
        assert_eq!(pieces.len(), 2);
        let areas: Vec<f64> = pieces.iter().map(Polygon::area).collect();
        assert!((areas.iter().sum::<f64>() - 4000.0).abs() < 1e-9);
        assert!(areas.iter().any(|a| (a - 37.0 * 40.0).abs() < 1e-9));
        for p in &pieces {
            assert!(p.signed_area() > 0.0);
        }
    }

    #[test]
    fn split_concave_u_shape_gives_three_pieces() {
        // U opening upward; a horizontal cut through both arms.
        let u = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(30.0, 0.0),
            Point2::new(30.0, 30.0),
            Point2::new(20.0, 30.0),
            Point2::new(20.0, 10.0),
            Point2::new(10.0, 10.0),
            Point2::new(10.0, 30.0),
            Point2::new(0.0, 30.0),
        ]);
        let pieces = split_by_line(&u, Point2::new(0.0, 20.0), Point2::new(1.0, 0.0));
        assert_eq!(pieces.len(), 3);
        let total: f64 = pieces.iter().map(Polygon::area).sum();
        assert!((total - u.area()).abs() < 1e-9);
        // Bottom piece merges back with either arm through a shared chord.
        let bottom = pieces.iter().max_by(|a, b| a.area().total_cmp(&b.area())).unwrap();
        let arm = pieces.iter().find(|p| (p.area() - 100.0).abs() < 1e-9).unwrap();
        let merged = merge_along_shared_edge(bottom, arm).expect("shared chord");
        assert!((merged.area() - bottom.area() - arm.area()).abs() < 1e-9);
        assert!(merged.is_simple());
    }

    #[test]
    fn split_through_vertex() {
        let sq = rect(10.0, 10.0);
        let pieces = split_by_line(&sq, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            assert!((p.area() - 50.0).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_line_returns_input() {
        let sq = rect(10.0, 10.0);
        let pieces = split_by_line(&sq, Point2::new(20.0, 0.0), Point2::new(0.0, 1.0));
        assert_eq!(pieces, vec![sq]);
    }

    #[test]
    fn inset_rectangle() {
        let r = rect(100.0, 40.0);
        let i = inset_uniform(&r, 4.0).unwrap();
        assert!((i.area() - 92.0 * 32.0).abs() < 1e-9);
        assert!(inset_uniform(&r, 25.0).is_none());
    }

    #[test]
    fn inset_with_per_edge_distances() {
        let r = rect(100.0, 40.0);
        let i = inset(&r, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((i.area() - (100.0 - 6.0) * (40.0 - 4.0)).abs() < 1e-9);
    }

    #[test]
    fn inset_drops_collapsed_edge() {
        // Trapezoid whose short top edge vanishes under a large inset.
        let t = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(40.0, 0.0),
            Point2::new(21.0, 19.0),
            Point2::new(19.0, 19.0),
        ]);
        let i = inset_uniform(&t, 5.0).unwrap();
        assert_eq!(i.len(), 3);
        assert!(i.is_simple());
    }

    #[test]
    fn obb_of_rotated_rectangle() {
        let a = 0.3_f64;
        let (u, v) = (Point2::new(a.cos(), a.sin()), Point2::new(-a.sin(), a.cos()));
        let pts = vec![Point2::default(), u * 50.0, u * 50.0 + v * 20.0, v * 20.0];
        let b = oriented_box(&pts).unwrap();
        assert!((b.half_major - 25.0).abs() < 1e-9);
        assert!((b.half_minor - 10.0).abs() < 1e-9);
        assert!(b.major.dot(u).abs() > 1.0 - 1e-12);
    }

    #[test]
    fn triangulation_covers_area() {
        let u = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(30.0, 0.0),
            Point2::new(30.0, 30.0),
            Point2::new(20.0, 30.0),
            Point2::new(20.0, 10.0),
            Point2::new(10.0, 10.0),
            Point2::new(10.0, 30.0),
            Point2::new(0.0, 30.0),
        ]);
        let tris = triangulate(&u);
        assert_eq!(tris.len(), 6);
        let area: f64 = tris
            .iter()
            .map(|t| 0.5 * orient(u.ring[t[0]], u.ring[t[1]], u.ring[t[2]]))
            .sum();
        assert!((area - u.area()).abs() < 1e-9);
    }

    #[test]
    fn simplicity() {
        assert!(rect(1.0, 1.0).is_simple());
        let bowtie = Polygon::from_ring_unchecked(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!(!bowtie.is_simple());
    }
}
