//! Binary scene file: little-endian geometry arrays followed by a JSON
//! block with materials and per-object records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::class::SemanticClass;
use crate::geom::Bounds2;
use crate::materials::{MaterialInstance, Texture};

use super::building::BuildingSpec;
use super::mesh::{Mesh, Triangle};
use super::roads::RoadPiece;
use super::trees::TreeInstance;
use super::{SceneError, SceneModel, SceneStats};

pub const SCENE_MAGIC: &[u8; 8] = b"GTXSCN01";

#[derive(Serialize, Deserialize)]
struct Records {
    materials: Vec<MaterialInstance>,
    bounds: Bounds2,
    ground_level: f64,
    buildings: Vec<BuildingSpec>,
    trees: Vec<TreeInstance>,
    roads: Vec<RoadPiece>,
    stats: SceneStats,
}

fn io_err(e: std::io::Error) -> SceneError {
    SceneError::Format(e.to_string())
}

/// Writes the scene. Layout:
/// magic, u64 vertex count, f64 xyz per vertex, u64 triangle count,
/// (u32 ×3, u8 class, u32 material) per triangle, u64 texture count,
/// (u32 width, u32 height, rgb bytes) per texture, u64 JSON length, JSON.
pub fn write_scene<W: Write>(scene: &SceneModel, mut w: W) -> Result<(), SceneError> {
    let mut buf = Vec::with_capacity(16 + scene.mesh.positions.len() * 24 + scene.mesh.triangles.len() * 17);
    buf.extend_from_slice(SCENE_MAGIC);
    buf.extend_from_slice(&(scene.mesh.positions.len() as u64).to_le_bytes());
    for p in &scene.mesh.positions {
        for c in p {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    buf.extend_from_slice(&(scene.mesh.triangles.len() as u64).to_le_bytes());
    for t in &scene.mesh.triangles {
        for v in t.v {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(t.class.id());
        buf.extend_from_slice(&t.material.to_le_bytes());
    }
    buf.extend_from_slice(&(scene.textures.len() as u64).to_le_bytes());
    for t in &scene.textures {
        buf.extend_from_slice(&t.width.to_le_bytes());
        buf.extend_from_slice(&t.height.to_le_bytes());
        for px in &t.texels {
            buf.extend_from_slice(px);
        }
    }
    let records = Records {
        materials: scene.materials.clone(),
        bounds: scene.bounds,
        ground_level: scene.ground_level,
        buildings: scene.buildings.clone(),
        trees: scene.trees.clone(),
        roads: scene.roads.clone(),
        stats: scene.stats.clone(),
    };
    let json = serde_json::to_vec(&records).map_err(|e| SceneError::Format(e.to_string()))?;
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    w.write_all(&buf).map_err(io_err)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SceneError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| SceneError::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SceneError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SceneError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SceneError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SceneError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self, item_size: usize) -> Result<usize, SceneError> {
        let n = self.u64()? as usize;
        if n.saturating_mul(item_size) > self.data.len() - self.pos {
            return Err(SceneError::Format(format!("count {n} exceeds the remaining data")));
        }
        Ok(n)
    }
}

/// Reads a scene written by [`write_scene`] and validates it. Triangles
/// with an unknown class byte are rejected.
pub fn read_scene<R: Read>(mut r: R) -> Result<SceneModel, SceneError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(io_err)?;
    let mut c = Cursor { data: &data, pos: 0 };
    if c.take(8)? != SCENE_MAGIC {
        return Err(SceneError::Format("not a scene file".into()));
    }
    let nv = c.count(24)?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        positions.push([c.f64()?, c.f64()?, c.f64()?]);
    }
    let nt = c.count(17)?;
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nt {
        let v = [c.u32()?, c.u32()?, c.u32()?];
        let id = c.u8()?;
        let class = SemanticClass::from_id(id).ok_or_else(|| SceneError::Format(format!("triangle {i} has invalid class {id}")))?;
        triangles.push(Triangle { v, class, material: c.u32()? });
    }
    let ntex = c.count(8)?;
    let mut textures = Vec::with_capacity(ntex);
    for _ in 0..ntex {
        let (width, height) = (c.u32()?, c.u32()?);
        let n = width as usize * height as usize;
        let bytes = c.take(n * 3)?;
        let texels = bytes.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        textures.push(Texture { width, height, texels });
    }
    let len = c.count(1)?;
    let records: Records = serde_json::from_slice(c.take(len)?).map_err(|e| SceneError::Format(e.to_string()))?;
    if c.pos != data.len() {
        return Err(SceneError::Format("trailing bytes".into()));
    }
    let scene = SceneModel {
        mesh: Mesh { positions, triangles },
        materials: records.materials,
        textures,
        bounds: records.bounds,
        ground_level: records.ground_level,
        buildings: records.buildings,
        trees: records.trees,
        roads: records.roads,
        stats: records.stats,
    };
    scene.validate()?;
    Ok(scene)
}
