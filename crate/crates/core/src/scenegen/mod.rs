//! City model: buildings, trees and roads over the ground surface, merged
//! into one class-tagged triangle mesh.

mod building;
mod io;
mod mesh;
mod roads;
mod trees;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class::SemanticClass;
use crate::geodata::{BuildingAttributeRecord, GeodataError, LandUse, StreetNetwork, TerrainGrid};
use crate::geom::{triangulate, Bounds2, Point2, Polygon};
use crate::layout::{plot_seed, Designation, LandUseTable, Lot, LotId, LotLayout, Plot};
use crate::materials::{pick_material, randomize_instances, MaterialError, MaterialInstance, MaterialLibrary, MaterialRole, Texture};
use crate::seed::Seed;

pub use building::{
    default_feature_table, extrude_building, feature_box, level_range, sample_building, BuildingMesh, BuildingSpec, Feature,
    FeatureProbabilities, FeatureTable, Surface, RIDGE_RATIO,
};
pub use io::{read_scene, write_scene, SCENE_MAGIC};
pub use mesh::{Mesh, TriMesh, Triangle, Vec3};
pub use roads::{build_roads, classify_intersection, IntersectionType, RoadLayout, RoadPiece, RoadPieceKind, ROUNDABOUT_INNER_RATIO, SIDEWALK_WIDTH};
pub use trees::{place_trees, poisson_disk, tree_mesh, Species, TreeInstance};

/// Height offsets that keep coplanar surfaces in a fixed stacking order.
pub const GRASS_OFFSET: f64 = 0.03;
pub const ROAD_OFFSET: f64 = 0.05;
pub const INTERSECTION_OFFSET: f64 = 0.06;
pub const SIDEWALK_OFFSET: f64 = 0.15;
/// Ground extends this far beyond the street network.
pub const GROUND_MARGIN: f64 = 40.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("lot {0:?} leaves no footprint after the setback")]
    EmptyFootprint(LotId),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("terrain: {0}")]
    Terrain(#[from] GeodataError),
    #[error("scene assembly: {0}")]
    Assembly(String),
    #[error("scene file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneStats {
    pub buildings: usize,
    /// Building lots whose setback left no footprint.
    pub skipped_buildings: usize,
    pub trees: usize,
    pub road_segments: usize,
    pub intersections: BTreeMap<IntersectionType, usize>,
    pub road_joints: usize,
    pub skipped_zero_length_edges: usize,
    pub triangles: usize,
    /// Triangle count per class id.
    pub class_triangles: [usize; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneModel {
    pub mesh: Mesh,
    pub materials: Vec<MaterialInstance>,
    pub textures: Vec<Texture>,
    /// Extent of the ground surface.
    pub bounds: Bounds2,
    /// Mean ground elevation.
    pub ground_level: f64,
    pub buildings: Vec<BuildingSpec>,
    pub trees: Vec<TreeInstance>,
    pub roads: Vec<RoadPiece>,
    pub stats: SceneStats,
}

impl SceneModel {
    /// One hue shift per material instance, uniform over `range` degrees.
    pub fn randomize_materials<R: rand::Rng + ?Sized>(&mut self, range: (f64, f64), rng: &mut R) {
        randomize_instances(&mut self.materials, range, rng);
    }

    /// Structural checks: indices in range, finite coordinates, and a
    /// material on every triangle.
    pub fn validate(&self) -> Result<(), SceneError> {
        let nv = self.mesh.positions.len() as u32;
        if let Some(p) = self.mesh.positions.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(SceneError::Assembly(format!("non-finite vertex {p:?}")));
        }
        for (i, t) in self.mesh.triangles.iter().enumerate() {
            if t.v.iter().any(|&v| v >= nv) {
                return Err(SceneError::Assembly(format!("triangle {i} references a missing vertex")));
            }
            if t.material as usize >= self.materials.len() {
                return Err(SceneError::Assembly(format!("triangle {i} has no material")));
            }
        }
        Ok(())
    }
}

/// Everything the generator reads.
pub struct SceneInputs<'a> {
    pub layout: &'a LotLayout,
    /// Planarized network the plots were extracted from.
    pub network: &'a StreetNetwork,
    pub terrain: Option<&'a TerrainGrid>,
    pub priors: &'a [BuildingAttributeRecord],
    pub land_use: &'a LandUseTable,
    pub features: &'a FeatureTable,
    pub library: &'a MaterialLibrary,
}

fn lot_seed(parent: Seed, plots: &HashMap<u32, &Plot>, lot: &Lot) -> Seed {
    let base = match plots.get(&lot.parent_plot_id) {
        Some(p) => plot_seed(parent, p),
        None => parent.child_index("plot", u64::from(lot.parent_plot_id)),
    };
    base.child_index("lot", u64::from(lot.id.index))
}

/// Samples buildings and trees lot by lot, builds roads, and assembles the
/// scene. Each lot draws from its own seed stream.
pub fn generate_scene(inputs: &SceneInputs<'_>, seed: Seed) -> Result<SceneModel, SceneError> {
    let plots: HashMap<u32, &Plot> = inputs.layout.plots.iter().map(|p| (p.id, p)).collect();
    let building_seed = seed.child("building");
    let tree_seed = seed.child("trees");

    let sampled: Vec<Result<Option<BuildingSpec>, SceneError>> = inputs
        .layout
        .lots
        .par_iter()
        .filter(|l| l.designation == Some(Designation::Building))
        .map(|lot| {
            let params = &inputs.land_use[&lot.land_use];
            let probs = inputs.features.get(&lot.land_use).copied().unwrap_or(default_feature_table()[&lot.land_use]);
            let mut rng = lot_seed(building_seed, &plots, lot).rng();
            match sample_building(lot, params, &probs, inputs.priors, inputs.library, &mut rng) {
                Ok(b) => Ok(Some(b)),
                Err(SceneError::EmptyFootprint(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut buildings = Vec::new();
    let mut skipped = 0;
    for r in sampled {
        match r? {
            Some(b) => buildings.push(b),
            None => skipped += 1,
        }
    }

    let green: Vec<&Lot> = inputs.layout.lots.iter().filter(|l| l.designation == Some(Designation::Green)).collect();
    let trees: Vec<TreeInstance> = green
        .par_iter()
        .flat_map_iter(|lot| {
            let params = &inputs.land_use[&lot.land_use];
            place_trees(lot, params, &mut lot_seed(tree_seed, &plots, lot).rng())
        })
        .collect();

    let roads = build_roads(inputs.network);
    let green_lots: Vec<Lot> = green.into_iter().cloned().collect();
    let mut scene = assemble_city(
        buildings,
        trees,
        &roads,
        &green_lots,
        inputs.network.bounds(),
        inputs.terrain,
        inputs.library,
        seed.child("assembly"),
    )?;
    scene.stats.skipped_buildings = skipped;
    Ok(scene)
}

struct Assembler<'a> {
    mesh: Mesh,
    materials: Vec<MaterialInstance>,
    terrain: Option<&'a TerrainGrid>,
    library: &'a MaterialLibrary,
}

impl Assembler<'_> {
    fn instance(&mut self, class: SemanticClass, role: MaterialRole, land_use: Option<LandUse>, seed: Seed) -> Result<u32, SceneError> {
        let m = pick_material(self.library, class, role, land_use, &mut seed.rng())?;
        self.materials.push(MaterialInstance::of(m));
        Ok(self.materials.len() as u32 - 1)
    }

    fn instance_by_id(&mut self, id: &str) -> Result<u32, SceneError> {
        let m = self
            .library
            .get(id)
            .ok_or_else(|| SceneError::Assembly(format!("material {id:?} is not in the library")))?;
        self.materials.push(MaterialInstance::of(m));
        Ok(self.materials.len() as u32 - 1)
    }

    fn elevation(&self, p: Point2) -> Result<f64, SceneError> {
        match self.terrain {
            Some(t) => Ok(t.sample_elevation(p)?),
            None => Ok(0.0),
        }
    }

    /// Lays a flat triangulation onto the ground at `offset` above it.
    fn drape(&self, flat: &TriMesh, offset: f64) -> Result<TriMesh, SceneError> {
        let mut m = match self.terrain {
            Some(t) => {
                let longest = flat.max_edge_length();
                let mut levels = 0;
                while longest / f64::from(1u32 << levels) > t.cell_size && levels < 8 {
                    levels += 1;
                }
                flat.subdivided(levels)
            }
            None => flat.clone(),
        };
        for p in &mut m.positions {
            p[2] = self.elevation(Point2::new(p[0], p[1]))? + offset;
        }
        Ok(m)
    }

    fn add_polygon(&mut self, poly: &Polygon, offset: f64, class: SemanticClass, material: u32) -> Result<(), SceneError> {
        let flat = TriMesh::flat_polygon(poly, 0.0);
        let m = self.drape(&flat, offset)?;
        self.mesh.add(&m, class, material);
        Ok(())
    }
}

/// Flat ring between two concentric polygons with matching vertex counts.
fn annulus(outer: &Polygon, inner: &Polygon) -> TriMesh {
    let n = outer.len() as u32;
    let mut m = TriMesh::default();
    for p in outer.ring.iter().chain(inner.ring.iter()) {
        m.push_vertex([p.x, p.y, 0.0]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        m.triangles.push([i, j, n + j]);
        m.triangles.push([i, n + j, n + i]);
    }
    m
}

fn ground_mesh(bounds: Bounds2, terrain: Option<&TerrainGrid>) -> Result<TriMesh, SceneError> {
    let step = terrain.map_or(f64::INFINITY, |t| t.cell_size);
    let nx = ((bounds.width() / step).ceil() as u32).max(1);
    let ny = ((bounds.height() / step).ceil() as u32).max(1);
    let mut m = TriMesh::default();
    for j in 0..=ny {
        for i in 0..=nx {
            let x = bounds.min.x + bounds.width() * f64::from(i) / f64::from(nx);
            let y = bounds.min.y + bounds.height() * f64::from(j) / f64::from(ny);
            let z = match terrain {
                Some(t) => t.sample_elevation(Point2::new(x, y))?,
                None => 0.0,
            };
            m.push_vertex([x, y, z]);
        }
    }
    let w = nx + 1;
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (j * w + i, j * w + i + 1, (j + 1) * w + i + 1, (j + 1) * w + i);
            m.triangles.push([a, b, c]);
            m.triangles.push([a, c, d]);
        }
    }
    Ok(m)
}

/// Merges all components over the ground surface into one tagged mesh.
/// Building bases and tree bases are set from the terrain (zero without
/// terrain). Materials are drawn from per-object seed streams below `seed`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_city(
    mut buildings: Vec<BuildingSpec>,
    mut trees: Vec<TreeInstance>,
    roads: &RoadLayout,
    green_lots: &[Lot],
    extent: Bounds2,
    terrain: Option<&TerrainGrid>,
    library: &MaterialLibrary,
    seed: Seed,
) -> Result<SceneModel, SceneError> {
    let mut bounds = if extent.is_empty() { Bounds2 { min: Point2::new(0.0, 0.0), max: Point2::new(0.0, 0.0) } } else { extent };
    for b in &buildings {
        for p in &b.footprint.ring {
            bounds.include(*p);
        }
    }
    let mut bounds = bounds.expanded(GROUND_MARGIN);
    if let Some(t) = terrain {
        let tb = t.bounds();
        bounds = Bounds2 {
            min: Point2::new(bounds.min.x.max(tb.min.x), bounds.min.y.max(tb.min.y)),
            max: Point2::new(bounds.max.x.min(tb.max.x), bounds.max.y.min(tb.max.y)),
        };
        if bounds.is_empty() || bounds.width() <= 0.0 || bounds.height() <= 0.0 {
            return Err(SceneError::Assembly("terrain does not overlap the street network".into()));
        }
    }
    let ground_level = terrain.map_or(0.0, TerrainGrid::mean);
    let mut asm = Assembler { mesh: Mesh::default(), materials: Vec::new(), terrain, library };

    let ground = asm.instance(SemanticClass::Ground, MaterialRole::Default, None, seed.child("ground"))?;
    let g = ground_mesh(bounds, terrain)?;
    asm.mesh.add(&g, SemanticClass::Ground, ground);

    let grass_seed = seed.child("grass");
    for lot in green_lots {
        let key = (u64::from(lot.id.plot) << 32) | u64::from(lot.id.index);
        let mat = asm.instance(SemanticClass::Ground, MaterialRole::Grass, Some(lot.land_use), grass_seed.child_index("lot", key))?;
        asm.add_polygon(&lot.boundary, GRASS_OFFSET, SemanticClass::Ground, mat)?;
    }

    let road_seed = seed.child("roads");
    let mut stats = SceneStats::default();
    for (i, piece) in roads.pieces.iter().enumerate() {
        let s = road_seed.child_index("piece", i as u64);
        let mat = asm.instance(SemanticClass::Road, MaterialRole::Default, None, s.child("surface"))?;
        match &piece.kind {
            RoadPieceKind::Segment { .. } => {
                stats.road_segments += 1;
                asm.add_polygon(&piece.polygon, ROAD_OFFSET, SemanticClass::Road, mat)?;
            }
            RoadPieceKind::Intersection { intersection, .. } => {
                *stats.intersections.entry(*intersection).or_default() += 1;
                match &piece.hole {
                    Some(hole) => {
                        let ring = asm.drape(&annulus(&piece.polygon, hole), INTERSECTION_OFFSET)?;
                        asm.mesh.add(&ring, SemanticClass::Road, mat);
                        let island = asm.instance(SemanticClass::Ground, MaterialRole::Grass, None, s.child("island"))?;
                        asm.add_polygon(hole, GRASS_OFFSET, SemanticClass::Ground, island)?;
                    }
                    None => asm.add_polygon(&piece.polygon, INTERSECTION_OFFSET, SemanticClass::Road, mat)?,
                }
            }
            RoadPieceKind::Joint { .. } => {
                stats.road_joints += 1;
                asm.add_polygon(&piece.polygon, INTERSECTION_OFFSET, SemanticClass::Road, mat)?;
            }
        }
        if !piece.sidewalks.is_empty() {
            let walk = asm.instance(SemanticClass::Road, MaterialRole::Sidewalk, None, s.child("sidewalk"))?;
            for sw in &piece.sidewalks {
                asm.add_polygon(sw, SIDEWALK_OFFSET, SemanticClass::Road, walk)?;
            }
        }
    }
    stats.skipped_zero_length_edges = roads.skipped_zero_length;

    for b in &mut buildings {
        b.base_elevation = asm.elevation(b.footprint.centroid())?;
        let roof = asm.instance_by_id(&b.material.clone())?;
        let wall = match &b.wall_material {
            Some(id) => asm.instance_by_id(&id.clone())?,
            None => roof,
        };
        let bm = extrude_building(b)?;
        let base = asm.mesh.positions.len() as u32;
        asm.mesh.positions.extend_from_slice(&bm.mesh.positions);
        for (t, s) in bm.mesh.triangles.iter().zip(&bm.surfaces) {
            let material = if *s == Surface::Wall { wall } else { roof };
            asm.mesh.triangles.push(Triangle { v: t.map(|i| i + base), class: SemanticClass::Building, material });
        }
    }

    let tree_seed = seed.child("tree-material");
    for (i, t) in trees.iter_mut().enumerate() {
        t.base_elevation = asm.elevation(t.position)?;
        let mat = asm.instance(SemanticClass::Tree, MaterialRole::Default, None, tree_seed.child_index("tree", i as u64))?;
        asm.mesh.add(&tree_mesh(t), SemanticClass::Tree, mat);
    }

    stats.buildings = buildings.len();
    stats.trees = trees.len();
    stats.triangles = asm.mesh.triangles.len();
    stats.class_triangles = asm.mesh.class_histogram();
    let scene = SceneModel {
        mesh: asm.mesh,
        materials: asm.materials,
        textures: library.textures.clone(),
        bounds,
        ground_level,
        buildings,
        trees,
        roads: roads.pieces.clone(),
        stats,
    };
    scene.validate()?;
    Ok(scene)
}

/// Triangulated footprint area of a polygon; used by tests and oracles.
pub fn polygon_triangle_area(poly: &Polygon) -> f64 {
    triangulate(poly)
        .iter()
        .map(|t| {
            let (a, b, c) = (poly.ring[t[0]], poly.ring[t[1]], poly.ring[t[2]]);
            0.5 * (b - a).cross(c - a)
        })
        .sum()
}
