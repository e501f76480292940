//! Building sampling and extrusion.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::class::SemanticClass;
use crate::geodata::{BuildingAttributeRecord, LandUse};
use crate::geom::{inset_uniform, oriented_box, triangulate, Point2, Polygon};
use crate::layout::{LandUseParams, Lot, LotId};
use crate::materials::{pick_material, MaterialLibrary, MaterialRole};

use super::mesh::TriMesh;
use super::SceneError;

/// Ridge height above the eaves as a fraction of the wall height.
pub const RIDGE_RATIO: f64 = 0.15;

const CHIMNEY_SIZE: f64 = 1.0;
const CHIMNEY_HEIGHT: f64 = 1.5;
const STAIRS_SIZE: (f64, f64) = (3.0, 2.5);
const STAIRS_HEIGHT: f64 = 2.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    FlatRoof,
    GableRoof,
    HipRoof,
    Chimney,
    Stairs,
    CurtainWall,
}

/// Per-land-use feature probabilities. A flat roof takes the remaining
/// probability after gable and hip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureProbabilities {
    pub gable_roof: f64,
    pub hip_roof: f64,
    pub chimney: f64,
    /// Rooftop stair bulkhead; flat roofs only.
    pub stairs: f64,
    pub curtain_wall: f64,
}

impl FeatureProbabilities {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, p) in [
            ("gable_roof", self.gable_roof),
            ("hip_roof", self.hip_roof),
            ("chimney", self.chimney),
            ("stairs", self.stairs),
            ("curtain_wall", self.curtain_wall),
        ] {
            if !(0.0..=1.0).contains(&p) {
                errs.push(format!("{name} probability must be in [0, 1], got {p}"));
            }
        }
        if self.gable_roof + self.hip_roof > 1.0 + 1e-12 {
            errs.push("gable_roof + hip_roof must not exceed 1".into());
        }
        errs
    }
}

pub type FeatureTable = BTreeMap<LandUse, FeatureProbabilities>;

pub fn default_feature_table() -> FeatureTable {
    let mut t = BTreeMap::new();
    t.insert(
        LandUse::Residential,
        FeatureProbabilities { gable_roof: 0.45, hip_roof: 0.35, chimney: 0.3, stairs: 0.05, curtain_wall: 0.02 },
    );
    t.insert(
        LandUse::Commercial,
        FeatureProbabilities { gable_roof: 0.1, hip_roof: 0.05, chimney: 0.05, stairs: 0.5, curtain_wall: 0.6 },
    );
    t.insert(
        LandUse::Green,
        FeatureProbabilities { gable_roof: 0.0, hip_roof: 0.0, chimney: 0.0, stairs: 0.0, curtain_wall: 0.0 },
    );
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingSpec {
    pub lot: LotId,
    pub land_use: LandUse,
    pub footprint: Polygon,
    pub levels: u32,
    pub level_height: f64,
    /// Wall height, `levels * level_height`.
    pub height: f64,
    pub base_elevation: f64,
    pub material: String,
    /// Wall material when the building has a curtain wall.
    pub wall_material: Option<String>,
    pub features: BTreeSet<Feature>,
}

impl BuildingSpec {
    pub fn roof(&self) -> Feature {
        if self.features.contains(&Feature::GableRoof) {
            Feature::GableRoof
        } else if self.features.contains(&Feature::HipRoof) {
            Feature::HipRoof
        } else {
            Feature::FlatRoof
        }
    }

    pub fn eave_elevation(&self) -> f64 {
        self.base_elevation + self.height
    }
}

/// Level bounds for a lot: the land-use range, replaced by the span of level
/// counts from attribute records positioned inside the lot.
pub fn level_range(lot: &Lot, params: &LandUseParams, priors: &[BuildingAttributeRecord]) -> (u32, u32) {
    let counts: Vec<u32> = priors
        .iter()
        .filter(|r| lot.boundary.contains(r.position))
        .filter_map(BuildingAttributeRecord::level_count)
        .collect();
    match (counts.iter().min(), counts.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (params.min_levels, params.max_levels),
    }
}

/// A footprint usable for a pitched roof: four vertices, strictly convex.
fn pitched_roof_quad(footprint: &Polygon) -> bool {
    let ring = &footprint.ring;
    ring.len() == 4
        && (0..4).all(|i| {
            let (a, b, c) = (ring[i], ring[(i + 1) % 4], ring[(i + 2) % 4]);
            (b - a).cross(c - b) > 1e-9
        })
}

/// Draws a building for a lot. Levels come from a discrete uniform draw over
/// the level range; height is levels times the land use's level height.
pub fn sample_building<R: Rng + ?Sized>(
    lot: &Lot,
    params: &LandUseParams,
    features: &FeatureProbabilities,
    priors: &[BuildingAttributeRecord],
    library: &MaterialLibrary,
    rng: &mut R,
) -> Result<BuildingSpec, SceneError> {
    let footprint = inset_uniform(&lot.boundary, params.setback)
        .map(|p| p.without_collinear())
        .filter(|p| p.area() > 0.0)
        .ok_or(SceneError::EmptyFootprint(lot.id))?;
    let (lo, hi) = level_range(lot, params, priors);
    let levels = rng.random_range(lo..=hi);

    let mut set = BTreeSet::new();
    let u: f64 = rng.random();
    let roof = if u < features.gable_roof {
        Feature::GableRoof
    } else if u < features.gable_roof + features.hip_roof {
        Feature::HipRoof
    } else {
        Feature::FlatRoof
    };
    let roof = if roof != Feature::FlatRoof && !pitched_roof_quad(&footprint) { Feature::FlatRoof } else { roof };
    set.insert(roof);
    let chimney = rng.random::<f64>() < features.chimney;
    let stairs = rng.random::<f64>() < features.stairs;
    let curtain = rng.random::<f64>() < features.curtain_wall;

    let material = pick_material(library, SemanticClass::Building, MaterialRole::Default, Some(lot.land_use), rng)?;
    let wall_material = if curtain {
        Some(pick_material(library, SemanticClass::Building, MaterialRole::CurtainWall, Some(lot.land_use), rng)?.id.clone())
    } else {
        None
    };

    let mut spec = BuildingSpec {
        lot: lot.id,
        land_use: lot.land_use,
        footprint,
        levels,
        level_height: params.level_height,
        height: f64::from(levels) * params.level_height,
        base_elevation: 0.0,
        material: material.id.clone(),
        wall_material,
        features: set,
    };
    if curtain {
        spec.features.insert(Feature::CurtainWall);
    }
    if chimney && feature_box(&spec, Feature::Chimney).is_some() {
        spec.features.insert(Feature::Chimney);
    }
    if stairs && roof == Feature::FlatRoof && feature_box(&spec, Feature::Stairs).is_some() {
        spec.features.insert(Feature::Stairs);
    }
    Ok(spec)
}

/// Footprint of a rooftop box feature, if it fits inside the building.
pub fn feature_box(spec: &BuildingSpec, feature: Feature) -> Option<Polygon> {
    let obb = oriented_box(&spec.footprint.ring)?;
    let (u, v) = (obb.major, obb.minor());
    let (center, half_u, half_v) = match feature {
        Feature::Chimney => {
            let offset = if spec.roof() == Feature::FlatRoof { 0.3 } else { 0.5 };
            (obb.center + u * (offset * obb.half_major), 0.5 * CHIMNEY_SIZE, 0.5 * CHIMNEY_SIZE)
        }
        Feature::Stairs => (obb.center - u * (0.3 * obb.half_major), 0.5 * STAIRS_SIZE.0, 0.5 * STAIRS_SIZE.1),
        _ => return None,
    };
    let corners = vec![
        center - u * half_u - v * half_v,
        center + u * half_u - v * half_v,
        center + u * half_u + v * half_v,
        center - u * half_u + v * half_v,
    ];
    let inside = corners.iter().all(|c| spec.footprint.contains_with_margin(*c, 0.1));
    inside.then(|| Polygon::new(corners))
}

/// Which surface of a building a triangle belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Roof,
    Wall,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildingMesh {
    pub mesh: TriMesh,
    pub surfaces: Vec<Surface>,
}

impl BuildingMesh {
    fn push(&mut self, tri: [u32; 3], s: Surface) {
        self.mesh.triangles.push(tri);
        self.surfaces.push(s);
    }
}

/// Closed prism from the base to the eaves, with a flat, gable or hip roof
/// and any rooftop boxes as separate closed shells. Triangles wind outward.
pub fn extrude_building(spec: &BuildingSpec) -> Result<BuildingMesh, SceneError> {
    let fp = &spec.footprint;
    if fp.len() < 3 || !fp.is_simple() || fp.signed_area() <= 0.0 {
        return Err(SceneError::Geometry(format!("building in lot {:?} has an invalid footprint", spec.lot)));
    }
    let base = spec.base_elevation;
    let top = spec.eave_elevation();
    let rise = RIDGE_RATIO * spec.height;
    let mut out = BuildingMesh::default();
    let tris = triangulate(fp);

    let roof = spec.roof();
    let mut ring: Vec<Point2> = fp.ring.clone();
    if roof != Feature::FlatRoof {
        // Put the long sides on edges 0-1 and 2-3.
        let len = |i: usize| ring[i].distance(ring[(i + 1) % 4]);
        if len(0) + len(2) < len(1) + len(3) {
            ring.rotate_left(1);
        }
    }
    let n = ring.len() as u32;
    let ring_poly = Polygon::from_ring_unchecked(ring.clone());
    let tris = if roof == Feature::FlatRoof { tris } else { triangulate(&ring_poly) };
    for p in &ring {
        out.mesh.push_vertex([p.x, p.y, base]);
    }
    for p in &ring {
        out.mesh.push_vertex([p.x, p.y, top]);
    }
    for t in &tris {
        out.push([t[0] as u32, t[2] as u32, t[1] as u32], Surface::Wall);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        out.push([i, j, n + j], Surface::Wall);
        out.push([i, n + j, n + i], Surface::Wall);
    }
    let t = |i: u32| n + i;
    match roof {
        Feature::FlatRoof => {
            for tr in &tris {
                out.push(tr.map(|i| t(i as u32)), Surface::Roof);
            }
        }
        Feature::GableRoof | Feature::HipRoof => {
            let mid_a = (ring[1] + ring[2]) * 0.5;
            let mid_b = (ring[3] + ring[0]) * 0.5;
            let ridge_z = top + rise;
            let (mut ra, mut rb) = (mid_a, mid_b);
            let mut apex = false;
            if roof == Feature::HipRoof {
                let inset = 0.25 * (ring[1].distance(ring[2]) + ring[3].distance(ring[0]));
                let len = mid_a.distance(mid_b);
                if len - 2.0 * inset > 1e-6 {
                    let dir = (mid_a - mid_b).normalized();
                    ra = mid_a - dir * inset;
                    rb = mid_b + dir * inset;
                } else {
                    apex = true;
                }
            }
            if apex {
                let c = (mid_a + mid_b) * 0.5;
                let a = out.mesh.push_vertex([c.x, c.y, ridge_z]);
                for i in 0..4 {
                    out.push([t(i), t((i + 1) % 4), a], Surface::Roof);
                }
            } else {
                let a = out.mesh.push_vertex([ra.x, ra.y, ridge_z]);
                let b = out.mesh.push_vertex([rb.x, rb.y, ridge_z]);
                out.push([t(0), t(1), a], Surface::Roof);
                out.push([t(0), a, b], Surface::Roof);
                out.push([t(2), t(3), b], Surface::Roof);
                out.push([t(2), b, a], Surface::Roof);
                out.push([t(1), t(2), a], Surface::Roof);
                out.push([t(3), t(0), b], Surface::Roof);
            }
        }
        _ => unreachable!("roof() only returns roof features"),
    }

    let pitched = roof != Feature::FlatRoof;
    if spec.features.contains(&Feature::Chimney) {
        if let Some(fp) = feature_box(spec, Feature::Chimney) {
            let h = if pitched { rise + 1.0 } else { CHIMNEY_HEIGHT };
            add_box(&mut out, &fp, top, top + h);
        }
    }
    if spec.features.contains(&Feature::Stairs) && !pitched {
        if let Some(fp) = feature_box(spec, Feature::Stairs) {
            add_box(&mut out, &fp, top, top + STAIRS_HEIGHT);
        }
    }
    Ok(out)
}

/// Closed box over a convex counter-clockwise quad.
fn add_box(out: &mut BuildingMesh, fp: &Polygon, z0: f64, z1: f64) {
    let n = fp.len() as u32;
    let base = out.mesh.positions.len() as u32;
    for p in &fp.ring {
        out.mesh.push_vertex([p.x, p.y, z0]);
    }
    for p in &fp.ring {
        out.mesh.push_vertex([p.x, p.y, z1]);
    }
    for k in 1..n - 1 {
        out.push([base, base + k + 1, base + k], Surface::Roof);
        out.push([base + n, base + n + k, base + n + k + 1], Surface::Roof);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        out.push([base + i, base + j, base + n + j], Surface::Wall);
        out.push([base + i, base + n + j, base + n + i], Surface::Wall);
    }
}
