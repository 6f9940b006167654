use serde::Serialize;

pub const PATTERN_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternFamily {
    Spots,
    Stripes,
    Lattice,
}

/// Pattern geometry in texture pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PatternGeometry {
    /// Discs of `radius` on a square grid of pitch `spacing`; staggered rows
    /// are shifted by half a pitch.
    Spots {
        radius: f64,
        spacing: f64,
        staggered: bool,
    },
    /// Bands of `width` repeating every `spacing`, rotated by `orientation_deg`
    /// (0 = horizontal bands).
    Stripes {
        width: f64,
        spacing: f64,
        orientation_deg: f64,
    },
    /// Axis-aligned grid lines.
    Lattice { pitch: f64, line_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternSpec {
    pub id: usize,
    pub family: PatternFamily,
    pub geometry: PatternGeometry,
}

impl PatternSpec {
    /// Whether the pixel at `(x, y)` belongs to the foreground of the pattern.
    pub fn covers(&self, x: u32, y: u32) -> bool {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        match self.geometry {
            PatternGeometry::Spots {
                radius,
                spacing,
                staggered,
            } => {
                let row = (py / spacing).floor();
                let shift = if staggered && (row as i64) % 2 == 1 {
                    spacing / 2.0
                } else {
                    0.0
                };
                let cx = ((px - shift) / spacing).floor() * spacing + spacing / 2.0 + shift;
                let cy = row * spacing + spacing / 2.0;
                let (dx, dy) = (px - cx, py - cy);
                dx * dx + dy * dy <= radius * radius
            }
            PatternGeometry::Stripes {
                width,
                spacing,
                orientation_deg,
            } => {
                let t = orientation_deg.to_radians();
                let d = py * t.cos() + px * t.sin();
                d.rem_euclid(spacing) < width
            }
            PatternGeometry::Lattice { pitch, line_width } => {
                px.rem_euclid(pitch) < line_width || py.rem_euclid(pitch) < line_width
            }
        }
    }

    /// Row-major foreground mask for a `width × height` map.
    pub fn mask(&self, width: u32, height: u32) -> Vec<bool> {
        let mut out = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                out.push(self.covers(x, y));
            }
        }
        out
    }
}

/// The fixed 16-pattern catalog: 6 spot, 6 stripe and 4 lattice variants.
/// Every pattern repeats within 64 px so it is visible on the smallest maps.
pub fn build_patterns() -> Vec<PatternSpec> {
    let mut geoms = Vec::with_capacity(PATTERN_COUNT);
    for (radius, spacing, staggered) in [
        (3.0, 12.0, false),
        (5.0, 20.0, false),
        (8.0, 32.0, false),
        (4.0, 16.0, true),
        (7.0, 28.0, true),
        (12.0, 48.0, true),
    ] {
        geoms.push(PatternGeometry::Spots {
            radius,
            spacing,
            staggered,
        });
    }
    for orientation_deg in [0.0, 90.0, 45.0] {
        for width in [4.0, 12.0] {
            geoms.push(PatternGeometry::Stripes {
                width,
                spacing: width * 3.0,
                orientation_deg,
            });
        }
    }
    for pitch in [16.0, 32.0] {
        for line_width in [2.0, 6.0] {
            geoms.push(PatternGeometry::Lattice { pitch, line_width });
        }
    }
    geoms
        .into_iter()
        .enumerate()
        .map(|(id, geometry)| PatternSpec {
            id,
            family: match geometry {
                PatternGeometry::Spots { .. } => PatternFamily::Spots,
                PatternGeometry::Stripes { .. } => PatternFamily::Stripes,
                PatternGeometry::Lattice { .. } => PatternFamily::Lattice,
            },
            geometry,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_shape() {
        let p = build_patterns();
        assert_eq!(p.len(), 16);
        assert!(p.iter().enumerate().all(|(i, s)| s.id == i));
        let fams: HashSet<_> = p.iter().map(|s| s.family).collect();
        assert_eq!(fams.len(), 3);
        assert_eq!(p.iter().filter(|s| s.family == PatternFamily::Spots).count(), 6);
        assert_eq!(p.iter().filter(|s| s.family == PatternFamily::Stripes).count(), 6);
        assert_eq!(p.iter().filter(|s| s.family == PatternFamily::Lattice).count(), 4);
    }

    #[test]
    fn masks_are_mixed_and_distinct_at_min_size() {
        let masks: Vec<Vec<bool>> = build_patterns().iter().map(|p| p.mask(64, 64)).collect();
        for m in &masks {
            let fg = m.iter().filter(|b| **b).count();
            assert!(fg > 0 && fg < m.len());
        }
        let unique: HashSet<&Vec<bool>> = masks.iter().collect();
        assert_eq!(unique.len(), 16);
    }
}
