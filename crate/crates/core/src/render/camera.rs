//! Perspective overhead camera and solar geometry.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Bounds2, Point2};
use crate::scenegen::Vec3;

use super::vec::{add, cross, normalize, scale};
use super::RenderError;

pub const DEFAULT_FOCAL_PX: f64 = 5000.0;
pub const MAX_OFF_NADIR_DEG: f64 = 10.0;
/// Suns at or below this elevation are redrawn.
pub const MIN_SUN_ELEVATION_DEG: f64 = 5.0;
pub const MAX_LATITUDE_DEG: f64 = 70.0;
const CAMERA_TRIES: usize = 100;
const SUN_TRIES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    /// Eye position.
    pub position: Vec3,
    /// Point on the mean-ground plane hit by the central ray.
    pub target: Vec3,
    /// Heading of the image's up direction, clockwise from north.
    pub azimuth: f64,
    pub off_nadir: f64,
    pub width: u32,
    pub height: u32,
    pub gsd: f64,
    pub focal_px: f64,
}

/// Orthonormal view frame: `forward` along the central ray, `right` and
/// `up` along the image axes.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
}

impl Camera {
    /// Camera looking at `target` from `gsd * focal_px` above it, tilted by
    /// `off_nadir` towards `azimuth`.
    pub fn new(target: Vec3, azimuth: f64, off_nadir: f64, width: u32, height: u32, gsd: f64, focal_px: f64) -> Camera {
        let mut cam = Camera { position: target, target, azimuth, off_nadir, width, height, gsd, focal_px };
        let f = cam.frame().forward;
        let range = cam.altitude() / off_nadir.to_radians().cos();
        cam.position = add(target, scale(f, -range));
        cam
    }

    pub fn altitude(&self) -> f64 {
        self.gsd * self.focal_px
    }

    pub fn frame(&self) -> Frame {
        let (sa, ca) = self.azimuth.to_radians().sin_cos();
        let (so, co) = self.off_nadir.to_radians().sin_cos();
        let heading = [sa, ca, 0.0];
        let forward = [so * sa, so * ca, -co];
        let right = normalize(cross(forward, heading));
        let up = cross(right, forward);
        Frame { forward, right, up }
    }

    /// Unit ray direction through image position `(x, y)` in pixels, with
    /// `y` growing downwards and pixel centers at half-integers.
    pub fn ray_direction(&self, frame: &Frame, x: f64, y: f64) -> Vec3 {
        let u = x - 0.5 * f64::from(self.width);
        let v = 0.5 * f64::from(self.height) - y;
        normalize(add(add(scale(frame.forward, self.focal_px), scale(frame.right, u)), scale(frame.up, v)))
    }

    /// Image position of a world point, or `None` behind the camera.
    pub fn project(&self, frame: &Frame, p: Vec3) -> Option<(f64, f64)> {
        let d = [p[0] - self.position[0], p[1] - self.position[1], p[2] - self.position[2]];
        let depth = super::vec::dot(d, frame.forward);
        if depth <= 0.0 {
            return None;
        }
        let s = self.focal_px / depth;
        let u = super::vec::dot(d, frame.right) * s;
        let v = super::vec::dot(d, frame.up) * s;
        Some((u + 0.5 * f64::from(self.width), 0.5 * f64::from(self.height) - v))
    }

    /// Where the four image corners meet the plane `z`.
    pub fn ground_footprint(&self, z: f64) -> [Point2; 4] {
        let frame = self.frame();
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)].map(|(x, y)| {
            let d = self.ray_direction(&frame, x, y);
            let t = (z - self.position[2]) / d[2];
            Point2::new(self.position[0] + t * d[0], self.position[1] + t * d[1])
        })
    }
}

/// Draws azimuth and off-nadir angle, then a target uniformly over the
/// positions whose image footprint stays inside `bounds` on the plane
/// `ground_level`. Orientations that cannot fit are redrawn.
pub fn sample_camera<R: Rng + ?Sized>(
    bounds: Bounds2,
    ground_level: f64,
    rng: &mut R,
    gsd: f64,
    size: (u32, u32),
    focal_px: f64,
) -> Result<Camera, RenderError> {
    if bounds.is_empty() {
        return Err(RenderError::SceneTooSmall("scene bounds are empty".into()));
    }
    for _ in 0..CAMERA_TRIES {
        let azimuth = rng.random_range(0.0..360.0);
        let off_nadir = rng.random_range(0.0..=MAX_OFF_NADIR_DEG);
        let origin = [0.0, 0.0, ground_level];
        let probe = Camera::new(origin, azimuth, off_nadir, size.0, size.1, gsd, focal_px);
        let fp = probe.ground_footprint(ground_level);
        let fb = Bounds2::from_points(&fp);
        let (x0, x1) = (bounds.min.x - fb.min.x, bounds.max.x - fb.max.x);
        let (y0, y1) = (bounds.min.y - fb.min.y, bounds.max.y - fb.max.y);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let tx = if x0 == x1 { x0 } else { rng.random_range(x0..=x1) };
        let ty = if y0 == y1 { y0 } else { rng.random_range(y0..=y1) };
        return Ok(Camera::new([tx, ty, ground_level], azimuth, off_nadir, size.0, size.1, gsd, focal_px));
    }
    Err(RenderError::SceneTooSmall(format!(
        "a {}x{} px view at {gsd} m/px does not fit inside the {:.0} x {:.0} m scene; use a larger input extent or a smaller image",
        size.0,
        size.1,
        bounds.width(),
        bounds.height()
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SunState {
    /// Clockwise from north, degrees.
    pub azimuth: f64,
    pub elevation: f64,
    /// Irradiance per channel.
    pub irradiance: [f64; 3],
    /// Uniform sky term as a fraction of the irradiance.
    pub ambient: f64,
}

impl SunState {
    /// Unit vector pointing towards the sun.
    pub fn direction(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.to_radians().sin_cos();
        let (se, ce) = self.elevation.to_radians().sin_cos();
        [sa * ce, ca * ce, se]
    }
}

/// Solar declination in degrees for a day of the year.
pub fn declination(day: f64) -> f64 {
    23.44 * (std::f64::consts::TAU * (day - 81.0) / 365.0).sin()
}

/// Solar `(azimuth, elevation)` in degrees at `latitude` on `day`, for an
/// hour angle in degrees (zero at solar noon, positive in the afternoon).
pub fn sun_position(latitude: f64, day: f64, hour_angle: f64) -> (f64, f64) {
    let phi = latitude.to_radians();
    let delta = declination(day).to_radians();
    let h = hour_angle.to_radians();
    let sin_el = phi.sin() * delta.sin() + phi.cos() * delta.cos() * h.cos();
    let el = sin_el.clamp(-1.0, 1.0).asin();
    let az = (-delta.cos() * h.sin()).atan2(delta.sin() * phi.cos() - delta.cos() * phi.sin() * h.cos());
    (az.to_degrees().rem_euclid(360.0), el.to_degrees())
}

/// Uniform day of year and hour angle, redrawn until the sun is higher
/// than the minimum elevation.
pub fn sample_sun<R: Rng + ?Sized>(rng: &mut R, latitude: f64, irradiance: [f64; 3], ambient: f64) -> Result<SunState, RenderError> {
    if !(latitude.abs() <= MAX_LATITUDE_DEG) {
        return Err(RenderError::Settings(format!("latitude {latitude} outside [-{MAX_LATITUDE_DEG}, {MAX_LATITUDE_DEG}]")));
    }
    for _ in 0..SUN_TRIES {
        let day = rng.random_range(0.0..365.0);
        let hour = rng.random_range(-180.0..180.0);
        let (azimuth, elevation) = sun_position(latitude, day, hour);
        if elevation > MIN_SUN_ELEVATION_DEG {
            return Ok(SunState { azimuth, elevation, irradiance, ambient });
        }
    }
    unreachable!("sun above the horizon is always reachable below 70 degrees latitude")
}
