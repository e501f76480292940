//! Material library keyed by semantic class and land use, plus hue
//! randomization of material instances.

mod color;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class::SemanticClass;
use crate::geodata::LandUse;

pub use color::{hsv_to_rgb, hue_shift_image, hue_shift_rgb, rgb_to_hsv, HueShift};

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("material manifest: {0}")]
    Manifest(String),
    #[error("material {id:?}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("texture {path}: {message}")]
    Texture { path: PathBuf, message: String },
    #[error("no {role} material for class {class} and land use {land_use}")]
    NoMatch { class: SemanticClass, role: MaterialRole, land_use: String },
}

/// What part of an object a material is meant for. Roles other than
/// `default` fall back to the default role when the library has none.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialRole {
    #[default]
    Default,
    CurtainWall,
    Sidewalk,
    Grass,
}

impl fmt::Display for MaterialRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Default => "default",
            Self::CurtainWall => "curtain_wall",
            Self::Sidewalk => "sidewalk",
            Self::Grass => "grass",
        })
    }
}

/// 8-bit RGB bitmap. Texel values are used directly as linear albedo.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub texels: Vec<[u8; 3]>,
}

impl Texture {
    pub fn load(path: &Path) -> Result<Self, MaterialError> {
        let img = image::open(path)
            .map_err(|e| MaterialError::Texture { path: path.to_path_buf(), message: e.to_string() })?
            .to_rgb8();
        let (width, height) = img.dimensions();
        if width == 0 || height == 0 {
            return Err(MaterialError::Texture { path: path.to_path_buf(), message: "empty image".into() });
        }
        let texels = img.pixels().map(|p| p.0).collect();
        Ok(Self { width, height, texels })
    }

    /// Nearest-texel lookup with wrap-around; `u`, `v` in texels.
    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let x = (u.floor() as i64).rem_euclid(self.width as i64) as usize;
        let y = (v.floor() as i64).rem_euclid(self.height as i64) as usize;
        self.texels[y * self.width as usize + x].map(|c| f64::from(c) / 255.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Albedo {
    Constant([f64; 3]),
    /// Index into the texture table; `texel_size` in meters.
    Texture { texture: u32, texel_size: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub id: String,
    pub class: SemanticClass,
    pub role: MaterialRole,
    pub land_use: BTreeSet<LandUse>,
    pub albedo: Albedo,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialLibrary {
    pub materials: Vec<Material>,
    pub textures: Vec<Texture>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    material: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    id: String,
    class: SemanticClass,
    #[serde(default)]
    role: MaterialRole,
    land_use: Vec<LandUse>,
    rgb: Option<[f64; 3]>,
    texture: Option<PathBuf>,
    texel_size: Option<f64>,
}

const DEFAULT_TEXEL_SIZE: f64 = 0.3;

impl MaterialLibrary {
    /// Parses a TOML manifest. Texture paths are resolved against `base_dir`.
    /// Every invalid entry is reported, not just the first.
    pub fn from_manifest(text: &str, base_dir: &Path) -> Result<Self, Vec<MaterialError>> {
        let manifest: Manifest = toml::from_str(text).map_err(|e| vec![MaterialError::Manifest(e.to_string())])?;
        let mut lib = MaterialLibrary::default();
        let mut errors = Vec::new();
        let mut ids = BTreeSet::new();
        for entry in manifest.material {
            let bad = |reason: &str| MaterialError::Invalid { id: entry.id.clone(), reason: reason.to_string() };
            if !ids.insert(entry.id.clone()) {
                errors.push(bad("duplicate id"));
                continue;
            }
            if entry.land_use.is_empty() {
                errors.push(bad("needs at least one land_use tag"));
            }
            let albedo = match (&entry.rgb, &entry.texture) {
                (Some(rgb), None) => {
                    if entry.texel_size.is_some() {
                        errors.push(bad("texel_size only applies to textures"));
                    }
                    if rgb.iter().all(|c| (0.0..=1.0).contains(c)) {
                        Some(Albedo::Constant(*rgb))
                    } else {
                        errors.push(bad("rgb channels must lie in [0, 1]"));
                        None
                    }
                }
                (None, Some(path)) => {
                    let texel_size = entry.texel_size.unwrap_or(DEFAULT_TEXEL_SIZE);
                    if !(texel_size > 0.0 && texel_size.is_finite()) {
                        errors.push(bad("texel_size must be positive"));
                    }
                    match Texture::load(&base_dir.join(path)) {
                        Ok(t) => {
                            lib.textures.push(t);
                            Some(Albedo::Texture { texture: lib.textures.len() as u32 - 1, texel_size })
                        }
                        Err(e) => {
                            errors.push(e);
                            None
                        }
                    }
                }
                _ => {
                    errors.push(bad("needs exactly one of rgb or texture"));
                    None
                }
            };
            if let Some(albedo) = albedo {
                lib.materials.push(Material {
                    id: entry.id,
                    class: entry.class,
                    role: entry.role,
                    land_use: entry.land_use.into_iter().collect(),
                    albedo,
                });
            }
        }
        if errors.is_empty() {
            Ok(lib)
        } else {
            Err(errors)
        }
    }

    pub fn load(path: &Path) -> Result<Self, Vec<MaterialError>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![MaterialError::Manifest(format!("{}: {e}", path.display()))])?;
        Self::from_manifest(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Small constant-color library covering every class and land use.
    pub fn builtin() -> Self {
        use LandUse::*;
        use SemanticClass::*;
        let all = [Residential, Commercial, Green];
        let m = |id: &str, class, role, lu: &[LandUse], rgb: [f64; 3]| Material {
            id: id.to_string(),
            class,
            role,
            land_use: lu.iter().copied().collect(),
            albedo: Albedo::Constant(rgb),
        };
        let materials = vec![
            m("roof_terracotta", Building, MaterialRole::Default, &[Residential], [0.55, 0.25, 0.16]),
            m("roof_slate", Building, MaterialRole::Default, &[Residential], [0.28, 0.29, 0.33]),
            m("roof_shingle_brown", Building, MaterialRole::Default, &[Residential], [0.36, 0.27, 0.21]),
            m("roof_membrane_white", Building, MaterialRole::Default, &[Commercial], [0.78, 0.78, 0.76]),
            m("roof_gravel", Building, MaterialRole::Default, &[Commercial], [0.52, 0.50, 0.47]),
            m("roof_tar", Building, MaterialRole::Default, &[Commercial], [0.22, 0.22, 0.23]),
            m("glass_blue", Building, MaterialRole::CurtainWall, &[Residential, Commercial], [0.20, 0.32, 0.42]),
            m("asphalt", Road, MaterialRole::Default, &all, [0.18, 0.18, 0.19]),
            m("asphalt_worn", Road, MaterialRole::Default, &all, [0.27, 0.27, 0.27]),
            m("concrete_sidewalk", Road, MaterialRole::Sidewalk, &all, [0.62, 0.61, 0.58]),
            m("soil", Ground, MaterialRole::Default, &all, [0.38, 0.33, 0.25]),
            m("lawn", Ground, MaterialRole::Grass, &all, [0.24, 0.42, 0.16]),
            m("lawn_dry", Ground, MaterialRole::Grass, &all, [0.40, 0.45, 0.22]),
            m("foliage", Tree, MaterialRole::Default, &all, [0.12, 0.30, 0.09]),
            m("foliage_dark", Tree, MaterialRole::Default, &all, [0.08, 0.22, 0.08]),
        ];
        Self { materials, textures: Vec::new() }
    }

    pub fn get(&self, id: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.id == id)
    }

    /// Materials carrying the given land use, per class and role.
    pub fn candidates(&self, class: SemanticClass, role: MaterialRole, land_use: Option<LandUse>) -> Vec<&Material> {
        self.materials
            .iter()
            .filter(|m| m.class == class && m.role == role && land_use.is_none_or(|lu| m.land_use.contains(&lu)))
            .collect()
    }

    /// Checks that every combination the generator asks for can be served.
    pub fn validate_coverage(&self) -> Vec<MaterialError> {
        let mut errs = Vec::new();
        for lu in [LandUse::Residential, LandUse::Commercial] {
            if self.candidates(SemanticClass::Building, MaterialRole::Default, Some(lu)).is_empty() {
                errs.push(no_match(SemanticClass::Building, MaterialRole::Default, Some(lu)));
            }
        }
        for class in [SemanticClass::Ground, SemanticClass::Road, SemanticClass::Tree] {
            if self.candidates(class, MaterialRole::Default, None).is_empty() {
                errs.push(no_match(class, MaterialRole::Default, None));
            }
        }
        errs
    }
}

fn no_match(class: SemanticClass, role: MaterialRole, land_use: Option<LandUse>) -> MaterialError {
    MaterialError::NoMatch { class, role, land_use: land_use.map_or("any".to_string(), |l| l.to_string()) }
}

/// Uniform draw among materials for `class` tagged with `land_use` (any
/// land use when `None`). A role with no candidates falls back to the
/// default role.
pub fn pick_material<'a, R: Rng + ?Sized>(
    library: &'a MaterialLibrary,
    class: SemanticClass,
    role: MaterialRole,
    land_use: Option<LandUse>,
    rng: &mut R,
) -> Result<&'a Material, MaterialError> {
    let mut found = library.candidates(class, role, land_use);
    if found.is_empty() && role != MaterialRole::Default {
        found = library.candidates(class, MaterialRole::Default, land_use);
    }
    if found.is_empty() {
        return Err(no_match(class, role, land_use));
    }
    Ok(found[rng.random_range(0..found.len())])
}

/// A material as used by one object in a scene, with its own hue shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialInstance {
    pub material: String,
    pub albedo: Albedo,
    pub hue_shift: HueShift,
}

impl MaterialInstance {
    pub fn of(material: &Material) -> Self {
        Self { material: material.id.clone(), albedo: material.albedo, hue_shift: HueShift::default() }
    }
}

/// Draws one hue shift per instance, uniform over `range` (degrees). A
/// degenerate range assigns that single shift without consuming randomness.
pub fn randomize_instances<R: Rng + ?Sized>(instances: &mut [MaterialInstance], range: (f64, f64), rng: &mut R) {
    let (lo, hi) = range;
    for inst in instances {
        let d = if lo < hi { rng.random_range(lo..=hi) } else { lo };
        inst.hue_shift = HueShift::new(d);
    }
}
