use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{build_palette, build_patterns, ColorPalette, PatternSpec, PALETTE_SIZE, PATTERN_COUNT};
use crate::error::{Error, Result};

pub const DEFAULT_UV_SIZE: (u32, u32) = (512, 512);
pub const MIN_UV_SIZE: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UvSource {
    Original,
    WebImage,
    Random,
}

impl UvSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            UvSource::Original => "original",
            UvSource::WebImage => "web_image",
            UvSource::Random => "random",
        }
    }
}

impl fmt::Display for UvSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UvSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(UvSource::Original),
            "web_image" => Ok(UvSource::WebImage),
            "random" => Ok(UvSource::Random),
            other => Err(Error::Validation(format!("unknown texture source `{other}`"))),
        }
    }
}

/// Lightweight reference to a UV map that can be materialized on demand.
///
/// Textual ids: `orig_p012_t03` (or `orig_p012` for a plain color),
/// `rnd_p012_t03`, `web_00012`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UvRef {
    Original {
        palette_index: usize,
        pattern_id: Option<usize>,
    },
    Random {
        palette_index: usize,
        pattern_id: usize,
    },
    Web {
        index: usize,
    },
}

impl UvRef {
    pub fn source(&self) -> UvSource {
        match self {
            UvRef::Original { .. } => UvSource::Original,
            UvRef::Random { .. } => UvSource::Random,
            UvRef::Web { .. } => UvSource::WebImage,
        }
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    fn check(self) -> Result<Self> {
        let (pal, pat) = match self {
            UvRef::Original {
                palette_index,
                pattern_id,
            } => (palette_index, pattern_id),
            UvRef::Random {
                palette_index,
                pattern_id,
            } => (palette_index, Some(pattern_id)),
            UvRef::Web { .. } => return Ok(self),
        };
        if pal >= PALETTE_SIZE {
            return Err(Error::Range(format!("palette index {pal} >= {PALETTE_SIZE}")));
        }
        if let Some(p) = pat {
            if p >= PATTERN_COUNT {
                return Err(Error::Range(format!("pattern id {p} >= {PATTERN_COUNT}")));
            }
        }
        Ok(self)
    }
}

impl fmt::Display for UvRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UvRef::Original {
                palette_index,
                pattern_id: Some(t),
            } => write!(f, "orig_p{palette_index:03}_t{t:02}"),
            UvRef::Original {
                palette_index,
                pattern_id: None,
            } => write!(f, "orig_p{palette_index:03}"),
            UvRef::Random {
                palette_index,
                pattern_id,
            } => write!(f, "rnd_p{palette_index:03}_t{pattern_id:02}"),
            UvRef::Web { index } => write!(f, "web_{index:05}"),
        }
    }
}

impl FromStr for UvRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("malformed uv id `{s}`"));
        let num = |t: &str, prefix: char| -> Result<usize> {
            t.strip_prefix(prefix)
                .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|d| d.parse().ok())
                .ok_or_else(bad)
        };
        let r = if let Some(rest) = s.strip_prefix("web_") {
            UvRef::Web {
                index: num(&format!("w{rest}"), 'w')?,
            }
        } else if let Some(rest) = s.strip_prefix("rnd_") {
            let (p, t) = rest.split_once('_').ok_or_else(bad)?;
            UvRef::Random {
                palette_index: num(p, 'p')?,
                pattern_id: num(t, 't')?,
            }
        } else if let Some(rest) = s.strip_prefix("orig_") {
            match rest.split_once('_') {
                Some((p, t)) => UvRef::Original {
                    palette_index: num(p, 'p')?,
                    pattern_id: Some(num(t, 't')?),
                },
                None => UvRef::Original {
                    palette_index: num(rest, 'p')?,
                    pattern_id: None,
                },
            }
        } else {
            return Err(bad());
        };
        r.check()
    }
}

/// RGB8 raster painted onto a clothing region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UvTextureMap {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB8, `width * height * 3` bytes.
    pub pixels: Vec<u8>,
    pub source: UvSource,
    /// `(palette_index, pattern_id)` for generated maps.
    pub provenance: Option<(usize, usize)>,
}

impl UvTextureMap {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Nearest-texel lookup with `(u, v)` wrapped into `[0, 1)`.
    pub fn sample(&self, u: f64, v: f64) -> [u8; 3] {
        let x = ((u.rem_euclid(1.0) * self.width as f64) as u32).min(self.width - 1);
        let y = ((v.rem_euclid(1.0) * self.height as f64) as u32).min(self.height - 1);
        self.pixel(x, y)
    }

    pub fn to_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel buffer matches dimensions")
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        self.to_image().save(path)?;
        Ok(())
    }
}

fn check_size(size: (u32, u32)) -> Result<()> {
    if size.0 < MIN_UV_SIZE || size.1 < MIN_UV_SIZE {
        return Err(Error::Validation(format!(
            "uv map size {}x{} below minimum {MIN_UV_SIZE}x{MIN_UV_SIZE}",
            size.0, size.1
        )));
    }
    Ok(())
}

fn paint(mask: &[bool], bg: [u8; 3], fg: [u8; 3]) -> Vec<u8> {
    let mut pixels = Vec::with_capacity(mask.len() * 3);
    for &m in mask {
        pixels.extend_from_slice(if m { &fg } else { &bg });
    }
    pixels
}

/// Draws pattern `pattern_id` in the contrasting color of palette entry
/// `palette_index` over a background of that entry.
pub fn compose_uv_map(
    palette_index: usize,
    pattern_id: usize,
    size: (u32, u32),
) -> Result<UvTextureMap> {
    UvComposer::new(size)?.compose(palette_index, pattern_id)
}

/// Batch composer that caches the palette and per-pattern masks for one size.
#[derive(Debug, Clone)]
pub struct UvComposer {
    size: (u32, u32),
    palette: ColorPalette,
    patterns: Vec<PatternSpec>,
    masks: Vec<Vec<bool>>,
}

impl UvComposer {
    pub fn new(size: (u32, u32)) -> Result<Self> {
        check_size(size)?;
        let patterns = build_patterns();
        let masks = patterns.iter().map(|p| p.mask(size.0, size.1)).collect();
        Ok(UvComposer {
            size,
            palette: build_palette(),
            patterns,
            masks,
        })
    }

    pub fn size(&self) -> (u32, u32) {
        self.size
    }

    pub fn compose(&self, palette_index: usize, pattern_id: usize) -> Result<UvTextureMap> {
        let mut map = self.compose_ref(UvRef::Random {
            palette_index,
            pattern_id,
        })?;
        map.source = UvSource::Random;
        Ok(map)
    }

    /// Materializes a generated reference (`Original` or `Random`).
    pub fn compose_ref(&self, uv: UvRef) -> Result<UvTextureMap> {
        let (pal, pat) = match uv.check()? {
            UvRef::Original {
                palette_index,
                pattern_id,
            } => (palette_index, pattern_id),
            UvRef::Random {
                palette_index,
                pattern_id,
            } => (palette_index, Some(pattern_id)),
            UvRef::Web { .. } => {
                return Err(Error::Validation(format!("{uv} is not a generated texture")))
            }
        };
        let bg_hsv = self.palette.get(pal)?;
        let bg = bg_hsv.to_rgb();
        let pixels = match pat {
            Some(p) => {
                let spec = self.patterns.get(p).ok_or_else(|| {
                    Error::Range(format!("pattern id {p} >= {}", self.patterns.len()))
                })?;
                paint(&self.masks[spec.id], bg, bg_hsv.contrasting().to_rgb())
            }
            None => bg.repeat((self.size.0 * self.size.1) as usize),
        };
        Ok(UvTextureMap {
            width: self.size.0,
            height: self.size.1,
            pixels,
            source: uv.source(),
            provenance: pat.map(|p| (pal, p)),
        })
    }
}

/// Resamples an arbitrary raster to `target` with bilinear interpolation
/// (corner texels map onto corner texels).
pub fn import_image_as_uv(raster: &RgbImage, target: (u32, u32)) -> Result<UvTextureMap> {
    let (sw, sh) = raster.dimensions();
    if sw == 0 || sh == 0 {
        return Err(Error::Validation("cannot import an empty raster".into()));
    }
    check_size(target)?;
    let (tw, th) = target;
    let scale = |dst: u32, src: u32| {
        if dst > 1 {
            (src - 1) as f64 / (dst - 1) as f64
        } else {
            0.0
        }
    };
    let (kx, ky) = (scale(tw, sw), scale(th, sh));
    let mut pixels = Vec::with_capacity((tw * th * 3) as usize);
    for y in 0..th {
        let fy = y as f64 * ky;
        let y0 = (fy.floor() as u32).min(sh - 1);
        let y1 = (y0 + 1).min(sh - 1);
        let wy = fy - y0 as f64;
        for x in 0..tw {
            let fx = x as f64 * kx;
            let x0 = (fx.floor() as u32).min(sw - 1);
            let x1 = (x0 + 1).min(sw - 1);
            let wx = fx - x0 as f64;
            let (a, b) = (raster.get_pixel(x0, y0).0, raster.get_pixel(x1, y0).0);
            let (c, d) = (raster.get_pixel(x0, y1).0, raster.get_pixel(x1, y1).0);
            for ch in 0..3 {
                let top = a[ch] as f64 * (1.0 - wx) + b[ch] as f64 * wx;
                let bot = c[ch] as f64 * (1.0 - wx) + d[ch] as f64 * wx;
                let val = top * (1.0 - wy) + bot * wy;
                pixels.push(val.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(UvTextureMap {
        width: tw,
        height: th,
        pixels,
        source: UvSource::WebImage,
        provenance: None,
    })
}

pub fn manifest_header() -> &'static str {
    "uv_id,source,palette_index,pattern_id"
}

/// One sidecar manifest line: `uv_id,source,palette_index,pattern_id`.
pub fn manifest_line(uv_id: &str, map: &UvTextureMap) -> String {
    match map.provenance {
        Some((p, t)) => format!("{uv_id},{},{p},{t}", map.source),
        None => format!("{uv_id},{},,", map.source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn uv_ref_text_round_trip() {
        for r in [
            UvRef::Original {
                palette_index: 12,
                pattern_id: Some(3),
            },
            UvRef::Original {
                palette_index: 624,
                pattern_id: None,
            },
            UvRef::Random {
                palette_index: 0,
                pattern_id: 15,
            },
            UvRef::Web { index: 42 },
        ] {
            assert_eq!(r.id().parse::<UvRef>().unwrap(), r);
        }
        assert!("rnd_p625_t00".parse::<UvRef>().is_err());
        assert!("rnd_p001_t16".parse::<UvRef>().is_err());
        assert!("rnd_p001".parse::<UvRef>().is_err());
        assert!("web_".parse::<UvRef>().is_err());
        assert!("foo".parse::<UvRef>().is_err());
    }

    #[test]
    fn compose_out_of_range() {
        assert!(matches!(compose_uv_map(625, 0, (64, 64)), Err(Error::Range(_))));
        assert!(matches!(compose_uv_map(0, 16, (64, 64)), Err(Error::Range(_))));
        assert!(matches!(compose_uv_map(0, 0, (32, 64)), Err(Error::Validation(_))));
    }

    #[test]
    fn compose_is_deterministic_and_records_provenance() {
        let a = compose_uv_map(123, 7, (64, 64)).unwrap();
        let b = compose_uv_map(123, 7, (64, 64)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance, Some((123, 7)));
        assert_eq!(a.source, UvSource::Random);
        assert_eq!(a.pixels.len(), 64 * 64 * 3);
    }

    #[test]
    fn white_background_stripes_are_visible() {
        // palette 624 is the V = 1 gray; pattern 6 is horizontal 4 px stripes
        let map = compose_uv_map(624, 6, (64, 64)).unwrap();
        let bg = [255, 255, 255];
        let fg = [153, 153, 153];
        let mut n_fg = 0;
        for y in 0..64 {
            for x in 0..64 {
                let p = map.pixel(x, y);
                let expect_fg = (y % 12) < 4;
                assert_eq!(p, if expect_fg { fg } else { bg }, "({x},{y})");
                n_fg += expect_fg as usize;
            }
        }
        assert!(n_fg > 0);
    }

    #[test]
    fn import_identity_and_resample() {
        let mut img = RgbImage::new(512, 512);
        for (x, y, p) in img.enumerate_pixels_mut() {
            *p = Rgb([(x % 256) as u8, (y % 256) as u8, ((x * y) % 251) as u8]);
        }
        let uv = import_image_as_uv(&img, (512, 512)).unwrap();
        assert_eq!(uv.pixels, img.as_raw().clone());
        assert_eq!(uv.source, UvSource::WebImage);

        let mut wide = RgbImage::new(1024, 512);
        for (x, y, p) in wide.enumerate_pixels_mut() {
            *p = Rgb([(x / 4) as u8, (y / 2) as u8, 7]);
        }
        let uv = import_image_as_uv(&wide, (512, 512)).unwrap();
        assert_eq!(uv.pixel(0, 0), wide.get_pixel(0, 0).0);
        assert_eq!(uv.pixel(511, 0), wide.get_pixel(1023, 0).0);
        assert_eq!(uv.pixel(0, 511), wide.get_pixel(0, 511).0);
        assert_eq!(uv.pixel(511, 511), wide.get_pixel(1023, 511).0);
    }

    #[test]
    fn import_bilinear_matches_oracle() {
        // 2x2 source blown up to 64x64: interior values are the plain
        // bilinear blend of the four corners.
        let mut img = RgbImage::new(2, 2);
        img.put_pixel(0, 0, Rgb([0, 0, 0]));
        img.put_pixel(1, 0, Rgb([252, 0, 0]));
        img.put_pixel(0, 1, Rgb([0, 252, 0]));
        img.put_pixel(1, 1, Rgb([252, 252, 252]));
        let uv = import_image_as_uv(&img, (64, 64)).unwrap();
        for (x, y) in [(0u32, 0u32), (21, 42), (63, 10), (32, 63)] {
            let (fx, fy) = (x as f64 / 63.0, y as f64 / 63.0);
            let r = 252.0 * fx;
            let g = 252.0 * fy;
            let b = 252.0 * fx * fy;
            assert_eq!(
                uv.pixel(x, y),
                [r.round() as u8, g.round() as u8, b.round() as u8]
            );
        }
    }

    #[test]
    fn import_empty_is_error() {
        assert!(matches!(
            import_image_as_uv(&RgbImage::new(0, 0), (512, 512)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn manifest_lines() {
        let m = compose_uv_map(5, 2, (64, 64)).unwrap();
        assert_eq!(manifest_line("rnd_p005_t02", &m), "rnd_p005_t02,random,5,2");
    }
}
