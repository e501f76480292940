//! Hexcone HSV on linear RGB and hue rotation.

use serde::{Deserialize, Serialize};

/// Hue rotation in degrees, kept in `[-180, 180)`. Any angle is accepted and
/// wrapped, so a full turn is the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HueShift(f64);

impl HueShift {
    pub fn new(degrees: f64) -> Self {
        Self((degrees + 180.0).rem_euclid(360.0) - 180.0)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0.0
    }

    /// Composition of two shifts.
    pub fn then(self, other: HueShift) -> HueShift {
        HueShift::new(self.0 + other.0)
    }
}

/// `[h, s, v]` with `h` in `[0, 360)`, `s` and `v` in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let c = max - min;
    let h = if c == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / c).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / c + 2.0)
    } else {
        60.0 * ((r - g) / c + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { c / max };
    [h.rem_euclid(360.0), s, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Rotates the hue of one linear-RGB color. The identity shift returns the
/// input unchanged, bit for bit.
pub fn hue_shift_rgb(rgb: [f64; 3], shift: HueShift) -> [f64; 3] {
    if shift.is_identity() {
        return rgb;
    }
    let [h, s, v] = rgb_to_hsv(rgb);
    let out = hsv_to_rgb([(h + shift.0).rem_euclid(360.0), s, v]);
    out.map(|c| c.clamp(0.0, 1.0))
}

/// Rotates the hue of every pixel of a bitmap in place.
pub fn hue_shift_image(pixels: &mut [[f64; 3]], shift: HueShift) {
    if shift.is_identity() {
        return;
    }
    for p in pixels {
        *p = hue_shift_rgb(*p, shift);
    }
}
