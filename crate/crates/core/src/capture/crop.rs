//! Keypoint-driven crop boxes.
//!
//! With `L` the vertical keypoint span, the box extends `0.15 L` above the
//! highest keypoint, `0.05 L` below the lowest (so `H = 1.2 L`) and `0.1 L`
//! beyond the outermost keypoints on each side. Narrow boxes (`W / H < 0.4`)
//! are padded equally on both sides to `W = 0.4 H`.

use image::RgbImage;

use crate::error::{Error, Result};

/// Edges are snapped to the integer grid within this tolerance before
/// outward rounding, so exact values do not grow by a pixel.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectF {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl RectF {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }
}

/// Integer pixel rectangle; may extend beyond the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelBox {
    pub left: i64,
    pub top: i64,
    pub width: i64,
    pub height: i64,
}

impl PixelBox {
    pub fn area(&self) -> i64 {
        self.width.max(0) * self.height.max(0)
    }

    pub fn right(&self) -> i64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> i64 {
        self.top + self.height
    }

    pub fn intersect(&self, w: u32, h: u32) -> PixelBox {
        let l = self.left.clamp(0, w as i64);
        let t = self.top.clamp(0, h as i64);
        let r = self.right().clamp(0, w as i64);
        let b = self.bottom().clamp(0, h as i64);
        PixelBox {
            left: l,
            top: t,
            width: (r - l).max(0),
            height: (b - t).max(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropBox {
    /// Vertical keypoint span `L` in pixels.
    pub span: f64,
    /// Exact box before rounding and clamping.
    pub raw: RectF,
    /// Outward-rounded box before clamping.
    pub unclamped: PixelBox,
    /// Final box, clamped to the image.
    pub left: u32,
    pub top: u32,
    pub width: u32,
    pub height: u32,
}

impl CropBox {
    pub fn pixel_box(&self) -> PixelBox {
        PixelBox {
            left: self.left as i64,
            top: self.top as i64,
            width: self.width as i64,
            height: self.height as i64,
        }
    }

    /// Share of the unclamped box that survived clamping.
    pub fn clamped_fraction(&self) -> f64 {
        let full = self.unclamped.area();
        if full == 0 {
            return 0.0;
        }
        (self.width as i64 * self.height as i64) as f64 / full as f64
    }
}

pub fn crop_box(points: &[(f64, f64)], image_w: u32, image_h: u32) -> Result<CropBox> {
    if points.len() < 2 || points.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
        return Err(Error::Degenerate("need at least two finite keypoints".into()));
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64| {
        points.iter().map(sel).fold(init, f)
    };
    let u_min = fold(f64::min, f64::INFINITY, |p| p.0);
    let u_max = fold(f64::max, f64::NEG_INFINITY, |p| p.0);
    let v_min = fold(f64::min, f64::INFINITY, |p| p.1);
    let v_max = fold(f64::max, f64::NEG_INFINITY, |p| p.1);
    let span = v_max - v_min;
    if span <= 0.0 {
        return Err(Error::Degenerate("keypoints have no vertical extent".into()));
    }
    let top = v_min - span * 15.0 / 100.0;
    let bottom = v_max + span * 5.0 / 100.0;
    let mut left = u_min - span * 10.0 / 100.0;
    let mut right = u_max + span * 10.0 / 100.0;
    let height = bottom - top;
    let min_width = height * 2.0 / 5.0;
    if right - left < min_width {
        let pad = (min_width - (right - left)) / 2.0;
        left -= pad;
        right += pad;
    }
    let raw = RectF { left, top, right, bottom };
    let lo = |x: f64| (x + SNAP).floor() as i64;
    let hi = |x: f64| (x - SNAP).ceil() as i64;
    let (l, t, r, b) = (lo(left), lo(top), hi(right), hi(bottom));
    let unclamped = PixelBox {
        left: l,
        top: t,
        width: r - l,
        height: b - t,
    };
    let c = unclamped.intersect(image_w, image_h);
    Ok(CropBox {
        span,
        raw,
        unclamped,
        left: c.left as u32,
        top: c.top as u32,
        width: c.width as u32,
        height: c.height as u32,
    })
}

/// Copies the part of `region` that lies inside `frame`.
pub fn extract_crop(frame: &RgbImage, region: &PixelBox) -> Result<RgbImage> {
    let c = region.intersect(frame.width(), frame.height());
    if c.area() == 0 {
        return Err(Error::Validation("crop box does not intersect the frame".into()));
    }
    Ok(image::imageops::crop_imm(
        frame,
        c.left as u32,
        c.top as u32,
        c.width as u32,
        c.height as u32,
    )
    .to_image())
}

/// Which boxes become dataset images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPolicy {
    pub min_height_px: u32,
    pub min_clamped_fraction: f64,
    pub min_visibility: f64,
}

impl Default for DetectionPolicy {
    fn default() -> Self {
        DetectionPolicy {
            min_height_px: 20,
            min_clamped_fraction: 0.5,
            min_visibility: 3.0 / 7.0,
        }
    }
}

impl DetectionPolicy {
    pub fn accepts(&self, b: &CropBox, visibility: f64) -> bool {
        b.height >= self.min_height_px
            && b.width > 0
            && b.clamped_fraction() >= self.min_clamped_fraction
            && visibility >= self.min_visibility - 1e-12
    }
}
