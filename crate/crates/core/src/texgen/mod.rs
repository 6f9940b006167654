//! Procedural clothing textures.
//!
//! A fixed 625-entry HSV palette (a 24×5×5 chromatic grid plus 25 grays) is
//! combined with a 16-entry pattern catalog to produce 10,000 distinct UV
//! texture maps. Arbitrary raster images can also be imported as UV maps.

mod pattern;
mod pool;
mod uv;

pub use pattern::{build_patterns, PatternFamily, PatternGeometry, PatternSpec, PATTERN_COUNT};
pub use pool::{list_web_images, TexturePool, TextureStore};
pub use uv::{
    compose_uv_map, import_image_as_uv, manifest_header, manifest_line, UvComposer, UvRef,
    UvSource, UvTextureMap, DEFAULT_UV_SIZE, MIN_UV_SIZE,
};

use crate::error::{Error, Result};

/// Number of entries in [`build_palette`].
pub const PALETTE_SIZE: usize = 625;
/// Hue grid step in degrees.
pub const HUE_STEP: f64 = 15.0;
/// Saturation and value grid step.
pub const SV_STEP: f64 = 0.2;
/// Number of gray levels appended after the chromatic grid.
pub const GRAY_LEVELS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvColor {
    /// Hue in degrees, `[0, 360)`.
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl HsvColor {
    pub fn new(h: f64, s: f64, v: f64) -> Result<Self> {
        let c = HsvColor { h, s, v };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..360.0).contains(&self.h) {
            return Err(Error::Range(format!("hue {} outside [0,360)", self.h)));
        }
        if !(0.0..=1.0).contains(&self.s) || !(0.0..=1.0).contains(&self.v) {
            return Err(Error::Range(format!(
                "saturation/value ({}, {}) outside [0,1]",
                self.s, self.v
            )));
        }
        Ok(())
    }

    pub fn is_achromatic(&self) -> bool {
        self.s == 0.0
    }

    /// Contrasting pattern color: value shifted by 0.4 (up when room allows,
    /// otherwise down) and, for chromatic colors, the hue rotated by 180°.
    pub fn contrasting(&self) -> HsvColor {
        let v = if self.v + 0.4 <= 1.0 + 1e-9 {
            (self.v + 0.4).min(1.0)
        } else {
            (self.v - 0.4).max(0.0)
        };
        let h = if self.is_achromatic() {
            self.h
        } else {
            (self.h + 180.0) % 360.0
        };
        HsvColor { h, s: self.s, v }
    }

    pub fn to_rgb(&self) -> [u8; 3] {
        hsv_to_rgb(*self)
    }
}

/// The color palette: chromatic grid first (hue-major, then saturation, then
/// value), followed by the gray ramp from black to white.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorPalette {
    entries: Vec<HsvColor>,
}

impl ColorPalette {
    pub fn entries(&self) -> &[HsvColor] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<HsvColor> {
        self.entries.get(index).copied().ok_or_else(|| {
            Error::Range(format!(
                "palette index {index} out of range (palette has {})",
                self.entries.len()
            ))
        })
    }
}

pub fn build_palette() -> ColorPalette {
    let mut entries = Vec::with_capacity(PALETTE_SIZE);
    for hi in 0..24 {
        for si in 1..=5 {
            for vi in 1..=5 {
                entries.push(HsvColor {
                    h: hi as f64 * HUE_STEP,
                    s: si as f64 * SV_STEP,
                    v: vi as f64 * SV_STEP,
                });
            }
        }
    }
    for k in 0..GRAY_LEVELS {
        entries.push(HsvColor {
            h: 0.0,
            s: 0.0,
            v: k as f64 / (GRAY_LEVELS - 1) as f64,
        });
    }
    ColorPalette { entries }
}

/// Hexcone HSV to RGB, channels rounded to the nearest integer.
pub fn hsv_to_rgb(c: HsvColor) -> [u8; 3] {
    let chroma = c.v * c.s;
    let sector = (c.h / 60.0).rem_euclid(6.0);
    let x = chroma * (1.0 - ((sector % 2.0) - 1.0).abs());
    let (r, g, b) = match sector as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = c.v - chroma;
    let q = |f: f64| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r), q(g), q(b)]
}
