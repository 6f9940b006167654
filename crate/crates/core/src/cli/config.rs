//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! scenes = ["plaza", "street"]
//!
//! [paths]
//! catalog = "catalog.tsv"
//! scenes_dir = "scenes"
//! cameras = "cameras.txt"
//! out = "out"
//!
//! [population]
//! total = 50
//! random = 50
//!
//! [scene.plaza]
//! capacity = 12
//! ```
//!
//! Relative paths are taken from the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persona::{PopulationSpec, SourceMix};
use crate::texgen::{MIN_UV_SIZE, PALETTE_SIZE, PATTERN_COUNT};
use crate::world::Scene;

fn bundled(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub catalog: PathBuf,
    pub scenes_dir: PathBuf,
    pub cameras: PathBuf,
    /// Directory of web images used as textures.
    pub textures_dir: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            catalog: bundled("catalog.tsv"),
            scenes_dir: bundled("scenes"),
            cameras: bundled("cameras.txt"),
            textures_dir: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub total: usize,
    pub original: usize,
    pub web_image: usize,
    pub random: usize,
    pub skin_tones: Option<Vec<String>>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            total: 50,
            original: 0,
            web_image: 0,
            random: 50,
            skin_tones: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureConfig {
    /// Palette colours used for generated maps (a prefix of the palette).
    pub colors: usize,
    pub patterns: usize,
    /// Edge length of maps written by `gen-textures`.
    pub size: u32,
    /// Edge length of maps composed for rendering.
    pub render_size: u32,
}

impl Default for TextureConfig {
    fn default() -> Self {
        TextureConfig {
            colors: PALETTE_SIZE,
            patterns: PATTERN_COUNT,
            size: 512,
            render_size: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 480,
            height: 270,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureConfig {
    pub duration_s: f64,
    pub interval_s: f64,
    pub fps: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig {
            duration_s: 120.0,
            interval_s: 0.5,
            fps: crate::capture::VIDEO_FPS,
        }
    }
}

/// Per-scene values replacing the scene file or capture defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneOverride {
    pub capacity: Option<usize>,
    pub spawn_delay_s: Option<f64>,
    pub visits: Option<u32>,
    pub interval_s: Option<f64>,
    pub duration_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Scene names to run; empty means every scene in `scenes_dir`.
    pub scenes: Vec<String>,
    pub paths: Paths,
    pub population: PopulationConfig,
    pub textures: TextureConfig,
    pub render: RenderConfig,
    pub capture: CaptureConfig,
    pub scene: BTreeMap<String, SceneOverride>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            scenes: Vec::new(),
            paths: Paths::default(),
            population: PopulationConfig::default(),
            textures: TextureConfig::default(),
            render: RenderConfig::default(),
            capture: CaptureConfig::default(),
            scene: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let p = &mut cfg.paths;
        for path in [&mut p.catalog, &mut p.scenes_dir, &mut p.cameras, &mut p.out]
            .into_iter()
            .chain(p.textures_dir.as_mut())
        {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let p = &self.paths;
        for (name, path, dir) in [
            ("paths.catalog", &p.catalog, false),
            ("paths.scenes_dir", &p.scenes_dir, true),
            ("paths.cameras", &p.cameras, false),
        ] {
            let ok = if dir { path.is_dir() } else { path.is_file() };
            if !ok {
                bad.push(format!("{name}: {} does not exist", path.display()));
            }
        }
        if let Some(t) = &p.textures_dir {
            if !t.is_dir() {
                bad.push(format!("paths.textures_dir: {} does not exist", t.display()));
            }
        }
        let pop = &self.population;
        if pop.total == 0 {
            bad.push("population.total: must be positive".into());
        }
        if pop.original + pop.web_image + pop.random != pop.total {
            bad.push(format!(
                "population: original + web_image + random = {} but total = {}",
                pop.original + pop.web_image + pop.random,
                pop.total
            ));
        }
        if pop.web_image > 0 && p.textures_dir.is_none() {
            bad.push("population.web_image: needs paths.textures_dir".into());
        }
        if pop.skin_tones.as_ref().is_some_and(Vec::is_empty) {
            bad.push("population.skin_tones: must not be empty".into());
        }
        let t = &self.textures;
        if !(1..=PALETTE_SIZE).contains(&t.colors) {
            bad.push(format!("textures.colors: must be in 1..={PALETTE_SIZE}"));
        }
        if !(1..=PATTERN_COUNT).contains(&t.patterns) {
            bad.push(format!("textures.patterns: must be in 1..={PATTERN_COUNT}"));
        }
        for (name, v) in [("textures.size", t.size), ("textures.render_size", t.render_size)] {
            if v < MIN_UV_SIZE {
                bad.push(format!("{name}: must be at least {MIN_UV_SIZE}"));
            }
        }
        let r = &self.render;
        if r.width == 0 || r.height == 0 || r.width > 4096 || r.height > 4096 {
            bad.push("render: width and height must be in 1..=4096".into());
        }
        let c = &self.capture;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        for (name, v) in [
            ("capture.duration_s", c.duration_s),
            ("capture.interval_s", c.interval_s),
            ("capture.fps", c.fps),
        ] {
            if !positive(v) {
                bad.push(format!("{name}: must be positive"));
            }
        }
        for (scene, o) in &self.scene {
            if o.capacity == Some(0) {
                bad.push(format!("scene.{scene}.capacity: must be positive"));
            }
            if o.spawn_delay_s.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
                bad.push(format!("scene.{scene}.spawn_delay_s: must be non-negative"));
            }
            if o.visits == Some(0) {
                bad.push(format!("scene.{scene}.visits: must be positive"));
            }
            for (name, v) in [("interval_s", o.interval_s), ("duration_s", o.duration_s)] {
                if v.is_some_and(|v| !positive(v)) {
                    bad.push(format!("scene.{scene}.{name}: must be positive"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    pub fn population_spec(&self) -> PopulationSpec {
        let p = &self.population;
        let mut spec = PopulationSpec::new(
            p.total,
            SourceMix {
                original: p.original,
                web_image: p.web_image,
                random: p.random,
            },
            self.seed,
        );
        if let Some(tones) = &p.skin_tones {
            spec.skin_tones = tones.clone();
        }
        spec
    }

    /// `scene` with its overrides applied.
    pub fn apply_overrides(&self, scene: &Scene) -> Result<Scene> {
        let mut s = scene.clone();
        if let Some(o) = self.scene.get(&scene.name) {
            if let Some(v) = o.capacity {
                s.capacity = v;
            }
            if let Some(v) = o.spawn_delay_s {
                s.spawn_delay_s = v;
            }
            if let Some(v) = o.visits {
                s.visits_before_despawn = v;
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn duration_for(&self, scene: &str) -> f64 {
        self.scene
            .get(scene)
            .and_then(|o| o.duration_s)
            .unwrap_or(self.capture.duration_s)
    }

    pub fn interval_for(&self, scene: &str) -> f64 {
        self.scene
            .get(scene)
            .and_then(|o| o.interval_s)
            .unwrap_or(self.capture.interval_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn relative_paths_follow_config() {
        let cfg = RunConfig::parse("seed = 3\n[paths]\nout = \"run\"\n", Path::new("/tmp/x")).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.paths.out, Path::new("/tmp/x/run"));
        assert_eq!(cfg.paths.catalog, bundled("catalog.tsv"));
    }

    #[test]
    fn every_bad_field_is_listed() {
        let text = r#"
[paths]
catalog = "/nope/catalog.tsv"
[population]
total = 10
random = 3
[textures]
patterns = 99
[capture]
interval_s = 0
[scene.plaza]
capacity = 0
"#;
        let cfg = RunConfig::parse(text, Path::new("/")).unwrap();
        let Err(Error::Config(msg)) = cfg.validate() else {
            panic!("expected config error");
        };
        for field in [
            "paths.catalog",
            "population:",
            "textures.patterns",
            "capture.interval_s",
            "scene.plaza.capacity",
        ] {
            assert!(msg.contains(field), "{field} missing from {msg}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::parse("sead = 1\n", Path::new(".")), Err(Error::Config(_))));
    }
}
