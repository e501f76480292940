//! Lambertian ray-traced views of a scene with matching label masks.
//!
//! Each pixel casts one primary ray through its center. At the first hit the
//! radiance is `rho / pi * E * (max(0, n . s) * V + ambient)` with `V` from a
//! single shadow ray towards the sun, and the label is the hit triangle's
//! class.

mod bvh;
mod camera;
mod vec;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class::SemanticClass;
use crate::materials::{hue_shift_rgb, Albedo, HueShift};
use crate::scenegen::{SceneModel, Vec3};
use crate::seed::Seed;

pub use bvh::{Bvh, Hit};
pub use camera::{
    declination, sample_camera, sample_sun, sun_position, Camera, Frame, SunState, DEFAULT_FOCAL_PX, MAX_LATITUDE_DEG,
    MAX_OFF_NADIR_DEG, MIN_SUN_ELEVATION_DEG,
};

use vec::{add, cross, dot, normalize, scale, sub};

/// Color written where a ray leaves the scene.
pub const SKY_COLOR: [u8; 3] = [135, 170, 210];
pub const DEFAULT_AMBIENT: f64 = 0.25;
/// Offset of shadow-ray origins along the surface normal, meters.
const SHADOW_BIAS: f64 = 1e-4;

/// Linear radiance to pixel scale: a sunlit horizontal surface with albedo
/// 0.5 under a 60 degree sun and the default ambient term maps to 180.
pub fn exposure() -> f64 {
    180.0 / (0.5 / PI * (60f64.to_radians().sin() + DEFAULT_AMBIENT))
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("{0}")]
    SceneTooSmall(String),
    #[error("invalid render settings: {0}")]
    Settings(String),
    #[error("writing {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub width: u32,
    pub height: u32,
    /// Meters per pixel at nadir on the mean ground plane.
    pub gsd: f64,
    pub focal_px: f64,
    pub ambient: f64,
    pub irradiance: [f64; 3],
    pub latitude: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1024,
            gsd: 0.3,
            focal_px: DEFAULT_FOCAL_PX,
            ambient: DEFAULT_AMBIENT,
            irradiance: [1.0; 3],
            latitude: 40.0,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.width == 0 || self.height == 0 {
            errs.push(format!("image size {}x{} must be positive", self.width, self.height));
        }
        if !(self.gsd > 0.0 && self.gsd.is_finite()) {
            errs.push(format!("gsd {} must be positive", self.gsd));
        }
        if !(self.focal_px > 0.0 && self.focal_px.is_finite()) {
            errs.push(format!("focal_px {} must be positive", self.focal_px));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            errs.push(format!("ambient {} outside [0, 1]", self.ambient));
        }
        if !self.irradiance.iter().all(|&e| e > 0.0 && e.is_finite()) {
            errs.push(format!("irradiance {:?} must be positive", self.irradiance));
        }
        if !(self.latitude.abs() <= MAX_LATITUDE_DEG) {
            errs.push(format!("latitude {} outside [-{MAX_LATITUDE_DEG}, {MAX_LATITUDE_DEG}]", self.latitude));
        }
        errs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMeta {
    pub view_index: u64,
    /// Seed of this view's stream; camera and sun draw from its children.
    pub seed: u64,
    pub camera: Camera,
    pub sun: SunState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOutput {
    pub rgb: RgbImage,
    pub labels: GrayImage,
    pub meta: ViewMeta,
}

/// Pre-quantization render.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRender {
    pub width: u32,
    pub height: u32,
    /// Radiance per pixel; `None` where the ray missed the scene.
    pub radiance: Vec<Option<[f64; 3]>>,
    pub labels: Vec<u8>,
}

impl LinearRender {
    pub fn to_images(&self) -> (RgbImage, GrayImage) {
        let k = exposure();
        let mut rgb = Vec::with_capacity(self.radiance.len() * 3);
        for r in &self.radiance {
            match r {
                Some(l) => rgb.extend(l.map(|c| (c * k).round().clamp(0.0, 255.0) as u8)),
                None => rgb.extend(SKY_COLOR),
            }
        }
        (
            RgbImage::from_raw(self.width, self.height, rgb).expect("buffer matches image size"),
            GrayImage::from_raw(self.width, self.height, self.labels.clone()).expect("buffer matches image size"),
        )
    }
}

#[derive(Clone, Copy, Debug)]
enum Shade {
    Constant([f64; 3]),
    Texture { texture: usize, texel_size: f64, shift: HueShift },
}

/// A scene prepared for rendering; reusable across views.
pub struct Renderer<'a> {
    scene: &'a SceneModel,
    bvh: Bvh,
    shades: Vec<Shade>,
}

impl<'a> Renderer<'a> {
    pub fn new(scene: &'a SceneModel) -> Self {
        let shades = scene
            .materials
            .iter()
            .map(|m| match m.albedo {
                Albedo::Constant(rgb) => Shade::Constant(hue_shift_rgb(rgb, m.hue_shift)),
                Albedo::Texture { texture, texel_size } => Shade::Texture { texture: texture as usize, texel_size, shift: m.hue_shift },
            })
            .collect();
        Self { scene, bvh: Bvh::build(&scene.mesh), shades }
    }

    pub fn scene(&self) -> &SceneModel {
        self.scene
    }

    fn albedo(&self, material: u32, p: Vec3, n: Vec3) -> [f64; 3] {
        match self.shades[material as usize] {
            Shade::Constant(rgb) => rgb,
            Shade::Texture { texture, texel_size, shift } => {
                let tex = &self.scene.textures[texture];
                let (u, v) = if n[2].abs() > 0.5 {
                    (p[0], -p[1])
                } else {
                    let h = (n[0].hypot(n[1])).max(1e-12);
                    ((-n[1] * p[0] + n[0] * p[1]) / h, -p[2])
                };
                hue_shift_rgb(tex.sample(u / texel_size, v / texel_size), shift)
            }
        }
    }

    fn trace(&self, o: Vec3, d: Vec3, sun: &SunState, s: Vec3) -> (Option<[f64; 3]>, u8) {
        let Some(hit) = self.bvh.closest(o, d) else {
            return (None, SemanticClass::Ground.id());
        };
        let tri = &self.scene.mesh.triangles[hit.triangle as usize];
        let [a, b, c] = tri.v.map(|i| self.scene.mesh.positions[i as usize]);
        let mut n = normalize(cross(sub(b, a), sub(c, a)));
        if dot(n, d) > 0.0 {
            n = scale(n, -1.0);
        }
        let p = add(o, scale(d, hit.t));
        let rho = self.albedo(tri.material, p, n);
        let cos = dot(n, s);
        let direct = if cos > 0.0 && !self.bvh.occluded(add(p, scale(n, SHADOW_BIAS)), s) { cos } else { 0.0 };
        let term = direct + sun.ambient;
        let l = [0, 1, 2].map(|k| rho[k] / PI * sun.irradiance[k] * term);
        (Some(l), tri.class.id())
    }

    pub fn render_linear(&self, camera: &Camera, sun: &SunState) -> LinearRender {
        let frame = camera.frame();
        let s = sun.direction();
        let (w, h) = (camera.width, camera.height);
        let rows: Vec<(Vec<Option<[f64; 3]>>, Vec<u8>)> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut rad = Vec::with_capacity(w as usize);
                let mut lab = Vec::with_capacity(w as usize);
                for x in 0..w {
                    let d = camera.ray_direction(&frame, f64::from(x) + 0.5, f64::from(y) + 0.5);
                    let (r, l) = self.trace(camera.position, d, sun, s);
                    rad.push(r);
                    lab.push(l);
                }
                (rad, lab)
            })
            .collect();
        let mut radiance = Vec::with_capacity((w * h) as usize);
        let mut labels = Vec::with_capacity((w * h) as usize);
        for (r, l) in rows {
            radiance.extend(r);
            labels.extend(l);
        }
        LinearRender { width: w, height: h, radiance, labels }
    }

    /// Renders one view with explicit camera and sun.
    pub fn render(&self, camera: &Camera, sun: &SunState) -> RenderOutput {
        let (rgb, labels) = self.render_linear(camera, sun).to_images();
        RenderOutput { rgb, labels, meta: ViewMeta { view_index: 0, seed: 0, camera: *camera, sun: *sun } }
    }

    /// Camera and sun for view `index` below `parent`.
    pub fn sample_view(&self, parent: Seed, index: u64, settings: &RenderSettings) -> Result<(Seed, Camera, SunState), RenderError> {
        let view_seed = parent.child_index("view", index);
        let camera = sample_camera(
            self.scene.bounds,
            self.scene.ground_level,
            &mut view_seed.child("camera").rng(),
            settings.gsd,
            (settings.width, settings.height),
            settings.focal_px,
        )?;
        let sun = sample_sun(&mut view_seed.child("sun").rng(), settings.latitude, settings.irradiance, settings.ambient)?;
        Ok((view_seed, camera, sun))
    }

    /// View `index` of the batch rooted at `parent`; depends only on those two.
    pub fn render_view(&self, parent: Seed, index: u64, settings: &RenderSettings) -> Result<RenderOutput, RenderError> {
        let (view_seed, camera, sun) = self.sample_view(parent, index, settings)?;
        let mut out = self.render(&camera, &sun);
        out.meta.view_index = index;
        out.meta.seed = view_seed.0;
        Ok(out)
    }
}

/// Renders a scene with one explicit camera and sun.
pub fn render(scene: &SceneModel, camera: &Camera, sun: &SunState) -> RenderOutput {
    Renderer::new(scene).render(camera, sun)
}

/// `n_views` independent views, each reproducible from `(parent, index)`.
pub fn render_batch(scene: &SceneModel, n_views: u64, parent: Seed, settings: &RenderSettings) -> Result<Vec<RenderOutput>, RenderError> {
    if n_views == 0 {
        return Err(RenderError::Settings("n_views must be at least 1".into()));
    }
    let errs = settings.validate();
    if !errs.is_empty() {
        return Err(RenderError::Settings(errs.join("; ")));
    }
    let r = Renderer::new(scene);
    (0..n_views).map(|i| r.render_view(parent, i, settings)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewPaths {
    pub rgb: PathBuf,
    pub label: PathBuf,
    pub meta: PathBuf,
}

/// File stem `<scene>_<index:05>` shared by a view's outputs.
pub fn view_stem(scene: &str, index: u64) -> String {
    format!("{scene}_{index:05}")
}

/// Writes `<stem>.rgb.png`, `<stem>.label.png` and `<stem>.meta.json`.
pub fn write_view(out: &RenderOutput, dir: &Path, scene: &str) -> Result<ViewPaths, RenderError> {
    let stem = view_stem(scene, out.meta.view_index);
    let paths = ViewPaths {
        rgb: dir.join(format!("{stem}.rgb.png")),
        label: dir.join(format!("{stem}.label.png")),
        meta: dir.join(format!("{stem}.meta.json")),
    };
    let io = |path: &Path, e: &dyn std::fmt::Display| RenderError::Io { path: path.to_path_buf(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, &e))?;
    out.rgb.save(&paths.rgb).map_err(|e| io(&paths.rgb, &e))?;
    out.labels.save(&paths.label).map_err(|e| io(&paths.label, &e))?;
    let meta = serde_json::to_string_pretty(&out.meta).map_err(|e| io(&paths.meta, &e))?;
    std::fs::write(&paths.meta, meta + "\n").map_err(|e| io(&paths.meta, &e))?;
    Ok(paths)
}
