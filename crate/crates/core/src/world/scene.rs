//! Scene files.
//!
//! ```text
//! scene <index> <name>
//! grid <width> <height> <cell_size_m>
//! <height rows of `.` (walkable) and `#` (blocked), `width` characters each>
//! dest <col> <row>                       (repeated, cycle order)
//! light <t> <intensity> <dx> <dy> <dz> <r> <g> <b>
//! capacity <n>
//! spawn_delay <seconds>
//! visits <n>
//! camera <id>                            (repeated)
//! ground <r> <g> <b> | blocked <r> <g> <b> | sky <r> <g> <b>
//! ```
//!
//! Lines starting with `//` are comments.

use std::path::Path;

use super::light::{LightKey, LightSchedule};
use super::path::{plan_path, Cell, GridPath};
use super::sim::{DEFAULT_SPAWN_DELAY_S, DEFAULT_VISITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    walkable: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize, cell_size: f64, walkable: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || walkable.len() != width * height {
            return Err(Error::Validation(format!(
                "grid {width}x{height} with {} cells",
                walkable.len()
            )));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Validation(format!("cell size {cell_size} must be positive")));
        }
        Ok(Grid {
            width,
            height,
            cell_size,
            walkable,
        })
    }

    pub fn from_rows(rows: &[&str], cell_size: f64) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.len());
        let mut walkable = Vec::with_capacity(width * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Validation(format!("grid row {i} has length {}", row.len())));
            }
            for ch in row.chars() {
                walkable.push(match ch {
                    '.' => true,
                    '#' => false,
                    other => {
                        return Err(Error::Validation(format!("unexpected grid character `{other}`")))
                    }
                });
            }
        }
        Grid::new(width, rows.len(), cell_size, walkable)
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.0 < self.width && c.1 < self.height
    }

    pub fn is_walkable(&self, c: Cell) -> bool {
        self.contains(c) && self.walkable[self.index(c)]
    }

    pub fn index(&self, c: Cell) -> usize {
        c.1 * self.width + c.0
    }

    pub fn cell(&self, idx: usize) -> Cell {
        (idx % self.width, idx / self.width)
    }

    /// Walkable 8-neighbours with their step costs.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const DIRS: [(isize, isize); 8] =
            [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        DIRS.iter().filter_map(move |&(dx, dy)| {
            let x = c.0.checked_add_signed(dx)?;
            let y = c.1.checked_add_signed(dy)?;
            if !self.is_walkable((x, y)) {
                return None;
            }
            if dx != 0 && dy != 0 {
                if !self.is_walkable((x, c.1)) || !self.is_walkable((c.0, y)) {
                    return None;
                }
                Some(((x, y), std::f64::consts::SQRT_2))
            } else {
                Some(((x, y), 1.0))
            }
        })
    }

    /// World-space `(x, z)` of a cell centre.
    pub fn center(&self, c: Cell) -> (f64, f64) {
        (
            (c.0 as f64 + 0.5) * self.cell_size,
            (c.1 as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing ground point `(x, z)`, if inside the grid.
    pub fn cell_at(&self, x: f64, z: f64) -> Option<Cell> {
        if x < 0.0 || z < 0.0 {
            return None;
        }
        let c = (
            (x / self.cell_size).floor() as usize,
            (z / self.cell_size).floor() as usize,
        );
        self.contains(c).then_some(c)
    }

    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.cell_size,
            self.height as f64 * self.cell_size,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub index: u32,
    pub name: String,
    pub walkable: Grid,
    /// Destination cycle, visited in order and wrapping around.
    pub destinations: Vec<Cell>,
    pub lighting: LightSchedule,
    pub capacity: usize,
    pub spawn_delay_s: f64,
    pub visits_before_despawn: u32,
    pub cameras: Vec<u32>,
    pub ground_rgb: [u8; 3],
    pub blocked_rgb: [u8; 3],
    pub sky_rgb: [u8; 3],
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::Validation("capacity must be at least 1".into()));
        }
        if self.destinations.len() < 2 {
            return Err(Error::Validation("at least two destinations are required".into()));
        }
        for (i, d) in self.destinations.iter().enumerate() {
            if !self.walkable.is_walkable(*d) {
                return Err(Error::Validation(format!(
                    "destination {i} at ({}, {}) is not walkable",
                    d.0, d.1
                )));
            }
        }
        let mut sorted = self.destinations.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.destinations.len() {
            return Err(Error::Validation("destinations must be distinct cells".into()));
        }
        if !(self.spawn_delay_s >= 0.0 && self.spawn_delay_s.is_finite()) {
            return Err(Error::Validation("spawn_delay must be non-negative".into()));
        }
        if self.visits_before_despawn == 0 {
            return Err(Error::Validation("visits must be at least 1".into()));
        }
        self.legs().map(|_| ())
    }

    /// Planned path for every leg `destinations[i] -> destinations[i + 1]`.
    pub fn legs(&self) -> Result<Vec<GridPath>> {
        let n = self.destinations.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.destinations[i], self.destinations[(i + 1) % n]);
                plan_path(&self.walkable, a, b)?.ok_or_else(|| {
                    Error::Validation(format!("no path from destination {i} to {}", (i + 1) % n))
                })
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut header: Option<(u32, String)> = None;
        let mut grid: Option<Grid> = None;
        let mut destinations = Vec::new();
        let mut keys = Vec::new();
        let mut capacity = None;
        let mut spawn_delay = None;
        let mut visits = None;
        let mut cameras = Vec::new();
        let mut ground = [118, 118, 108];
        let mut blocked = [64, 66, 74];
        let mut sky = [150, 178, 214];

        while let Some((ln, line)) = lines.next() {
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<f64> {
                toks.get(i)
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(ln, format!("`{}`: expected number at field {i}", toks[0])))
            };
            let int = |i: usize| -> Result<usize> {
                toks.get(i)
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(ln, format!("`{}`: expected integer at field {i}", toks[0])))
            };
            let arity = |n: usize| -> Result<()> {
                if toks.len() != n {
                    return Err(Error::parse(ln, format!("`{}` takes {} values", toks[0], n - 1)));
                }
                Ok(())
            };
            let rgb = || -> Result<[u8; 3]> {
                arity(4)?;
                let mut out = [0u8; 3];
                for (k, o) in out.iter_mut().enumerate() {
                    *o = toks[k + 1]
                        .parse()
                        .map_err(|_| Error::parse(ln, "color components must be 0..255"))?;
                }
                Ok(out)
            };
            match toks[0] {
                "scene" => {
                    arity(3)?;
                    header = Some((int(1)? as u32, toks[2].to_string()));
                }
                "grid" => {
                    arity(4)?;
                    let (w, h, cs) = (int(1)?, int(2)?, num(3)?);
                    let mut rows = Vec::with_capacity(h);
                    for _ in 0..h {
                        let (rln, row) = lines
                            .next()
                            .ok_or_else(|| Error::parse(ln, format!("grid declares {h} rows, file ended")))?;
                        if row.len() != w {
                            return Err(Error::parse(rln, format!("grid row has {} cells, expected {w}", row.len())));
                        }
                        rows.push(row);
                    }
                    grid = Some(Grid::from_rows(&rows, cs).map_err(|e| Error::parse(ln, e.to_string()))?);
                }
                "dest" => {
                    arity(3)?;
                    destinations.push((int(1)?, int(2)?));
                }
                "light" => {
                    arity(9)?;
                    keys.push(LightKey {
                        t: num(1)?,
                        intensity: num(2)?,
                        direction: [num(3)?, num(4)?, num(5)?],
                        color: [num(6)?, num(7)?, num(8)?],
                    });
                }
                "capacity" => {
                    arity(2)?;
                    capacity = Some(int(1)?);
                }
                "spawn_delay" => {
                    arity(2)?;
                    spawn_delay = Some(num(1)?);
                }
                "visits" => {
                    arity(2)?;
                    visits = Some(int(1)? as u32);
                }
                "camera" => {
                    arity(2)?;
                    cameras.push(int(1)? as u32);
                }
                "ground" => ground = rgb()?,
                "blocked" => blocked = rgb()?,
                "sky" => sky = rgb()?,
                other => return Err(Error::parse(ln, format!("unknown directive `{other}`"))),
            }
        }
        let (index, name) = header.ok_or_else(|| Error::parse(0, "missing `scene` line"))?;
        let walkable = grid.ok_or_else(|| Error::parse(0, "missing `grid` block"))?;
        let scene = Scene {
            index,
            name,
            walkable,
            destinations,
            lighting: if keys.is_empty() {
                LightSchedule::default()
            } else {
                LightSchedule::new(keys)?
            },
            capacity: capacity.unwrap_or(8),
            spawn_delay_s: spawn_delay.unwrap_or(DEFAULT_SPAWN_DELAY_S),
            visits_before_despawn: visits.unwrap_or(DEFAULT_VISITS),
            cameras,
            ground_rgb: ground,
            blocked_rgb: blocked,
            sky_rgb: sky,
        };
        scene.validate()?;
        Ok(scene)
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scene::parse(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Every `*.scene` file in `dir`, ordered by scene index. Indices and names
/// must be unique.
pub fn load_scenes(dir: &Path) -> Result<Vec<Scene>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "scene") {
            paths.push(p);
        }
    }
    paths.sort();
    let mut scenes = paths.iter().map(|p| load_scene(p)).collect::<Result<Vec<_>>>()?;
    scenes.sort_by_key(|s| s.index);
    for w in scenes.windows(2) {
        if w[0].index == w[1].index {
            return Err(Error::DuplicateId(format!("scene index {}", w[0].index)));
        }
    }
    let mut names: Vec<&str> = scenes.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateId(format!("scene `{}`", w[0])));
    }
    Ok(scenes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = "scene 1 test
grid 6 4 1.0
......
..##..
......
......
dest 0 0
dest 5 3
light 0 0.0 0 -1 0 1 1 1
light 3600 1.5 0 -1 0 1 1 1
capacity 3
camera 1
";

    #[test]
    fn parses_demo() {
        let s = Scene::parse(DEMO).unwrap();
        assert_eq!(s.walkable.width, 6);
        assert_eq!(s.destinations, vec![(0, 0), (5, 3)]);
        assert_eq!(s.capacity, 3);
        assert_eq!(s.spawn_delay_s, DEFAULT_SPAWN_DELAY_S);
        assert_eq!(s.visits_before_despawn, DEFAULT_VISITS);
        assert!(!s.walkable.is_walkable((2, 1)));
    }

    #[test]
    fn destination_in_wall() {
        let bad = DEMO.replace("dest 5 3", "dest 2 1");
        assert!(matches!(Scene::parse(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn one_cell_grid_two_destinations() {
        let s = "scene 1 tiny\ngrid 1 1 1.0\n.\ndest 0 0\ndest 0 0\n";
        assert!(matches!(Scene::parse(s), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_grid() {
        let bad = DEMO.replace("..##..", "..##.");
        assert!(matches!(Scene::parse(&bad), Err(Error::Parse { line: 4, .. })));
        let bad = DEMO.replace("..##..", "..##x.");
        assert!(matches!(Scene::parse(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn disconnected_destinations_rejected() {
        let s = "scene 1 split\ngrid 3 1 1.0\n.#.\ndest 0 0\ndest 2 0\n";
        assert!(matches!(Scene::parse(s), Err(Error::Validation(_))));
    }
}
