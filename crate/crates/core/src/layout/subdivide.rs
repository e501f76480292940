//! Recursive oriented-box bisection of plots into lots.

use rand::Rng;

use crate::geom::{merge_along_shared_edge, oriented_box, split_by_line, OrientedBox, Polygon};

use super::{LandUseParams, Lot, LotId, Plot};

/// Pieces below this area are always slivers, whatever the minimum lot size.
const SLIVER_AREA: f64 = 1.0;
const SLIVER_ANGLE_DEG: f64 = 2.0;
const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Subdivision {
    pub lots: Vec<Lot>,
    /// The plot was below the minimum lot area and became a single lot.
    pub undersized: bool,
    /// Lots left above the maximum area because no acceptable cut existed.
    pub oversized: usize,
}

/// Splits a plot into lots no larger than `max_lot_area`. Each cut runs
/// perpendicular to the long axis of the piece's minimum-area bounding box,
/// at a uniformly jittered position between 40% and 60% along that axis.
/// Pieces that come out too small or too sharp are merged back into their
/// largest neighbor across the cut.
pub fn subdivide_plot<R: Rng + ?Sized>(plot: &Plot, params: &LandUseParams, rng: &mut R) -> Subdivision {
    let area = plot.boundary.area();
    let mut pieces = Vec::new();
    let mut oversized = 0;
    let undersized = area < params.min_lot_area;
    if undersized {
        log::warn!("plot {} area {:.1} m² below minimum lot area {:.1} m²", plot.id, area, params.min_lot_area);
        pieces.push(plot.boundary.clone());
    } else {
        split_recursive(plot.boundary.clone(), params, rng, 0, &mut pieces, &mut oversized);
    }
    let lots = pieces
        .into_iter()
        .enumerate()
        .map(|(i, boundary)| Lot {
            id: LotId { plot: plot.id, index: i as u32 },
            parent_plot_id: plot.id,
            land_use: plot.land_use,
            area: boundary.area(),
            boundary,
            designation: None,
        })
        .collect();
    Subdivision { lots, undersized, oversized }
}

fn split_recursive<R: Rng + ?Sized>(
    poly: Polygon,
    params: &LandUseParams,
    rng: &mut R,
    depth: usize,
    out: &mut Vec<Polygon>,
    oversized: &mut usize,
) {
    if poly.area() <= params.max_lot_area {
        out.push(poly);
        return;
    }
    let Some(obb) = oriented_box(&poly.ring) else {
        *oversized += 1;
        out.push(poly);
        return;
    };
    let t: f64 = rng.random_range(0.4..0.6);
    let mut pieces = cut(&poly, &obb, obb.half_major * (2.0 * t - 1.0), params);
    if pieces.len() < 2 {
        pieces = match balanced_offset(&poly, &obb) {
            Some(s) => cut(&poly, &obb, s, params),
            None => Vec::new(),
        };
    }
    if pieces.len() < 2 || depth >= MAX_DEPTH {
        *oversized += 1;
        out.push(poly);
        return;
    }
    for p in pieces {
        split_recursive(p, params, rng, depth + 1, out, oversized);
    }
}

/// Cuts across the major axis at signed offset `s` from the box center and
/// repairs degenerate pieces.
fn cut(poly: &Polygon, obb: &OrientedBox, s: f64, params: &LandUseParams) -> Vec<Polygon> {
    let origin = obb.center + obb.major * s;
    let pieces = split_by_line(poly, origin, obb.minor());
    merge_degenerate(pieces, poly.min_angle_deg(), params.min_lot_area.max(SLIVER_AREA))
}

fn is_degenerate(p: &Polygon, parent_min_angle: f64, min_area: f64) -> bool {
    if p.area() < min_area {
        return true;
    }
    let a = p.min_angle_deg();
    a < SLIVER_ANGLE_DEG && a < parent_min_angle - 1e-9
}

fn merge_degenerate(mut pieces: Vec<Polygon>, parent_min_angle: f64, min_area: f64) -> Vec<Polygon> {
    loop {
        if pieces.len() < 2 {
            return pieces;
        }
        let mut bad: Vec<usize> = (0..pieces.len()).filter(|&i| is_degenerate(&pieces[i], parent_min_angle, min_area)).collect();
        if bad.is_empty() {
            return pieces;
        }
        bad.sort_by(|&i, &j| pieces[i].area().total_cmp(&pieces[j].area()).then(i.cmp(&j)));
        let mut merged_any = false;
        for &i in &bad {
            let best = (0..pieces.len())
                .filter(|&j| j != i)
                .filter_map(|j| merge_along_shared_edge(&pieces[j], &pieces[i]).map(|m| (j, m)))
                .max_by(|(j, _), (k, _)| pieces[*j].area().total_cmp(&pieces[*k].area()).then(k.cmp(j)));
            if let Some((j, merged)) = best {
                pieces[j] = merged;
                pieces.remove(i);
                merged_any = true;
                break;
            }
        }
        if !merged_any {
            return pieces;
        }
    }
}

/// Offset along the major axis at which the cut halves the area.
fn balanced_offset(poly: &Polygon, obb: &OrientedBox) -> Option<f64> {
    let total = poly.area();
    let below = |s: f64| -> f64 {
        let origin = obb.center + obb.major * s;
        split_by_line(poly, origin, obb.minor())
            .iter()
            .filter(|p| (p.centroid() - origin).dot(obb.major) < 0.0)
            .map(Polygon::area)
            .sum()
    };
    let (mut lo, mut hi) = (-obb.half_major, obb.half_major);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if below(mid) < 0.5 * total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    (s.is_finite() && s.abs() < obb.half_major).then_some(s)
}
