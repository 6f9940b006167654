use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::Rng;

use super::{import_image_as_uv, UvComposer, UvRef, UvSource, UvTextureMap, PALETTE_SIZE, PATTERN_COUNT};
use crate::error::{Error, Result};

/// The set of replacement textures characters can be dressed with.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TexturePool {
    pub random: Vec<UvRef>,
    pub web: Vec<UvRef>,
}

impl TexturePool {
    /// All `colors × patterns` generated maps (the first `colors` palette
    /// entries and the first `patterns` catalog patterns).
    pub fn generated(colors: usize, patterns: usize) -> Result<Self> {
        if colors > PALETTE_SIZE || patterns > PATTERN_COUNT {
            return Err(Error::Range(format!(
                "requested {colors} colors x {patterns} patterns, available {PALETTE_SIZE} x {PATTERN_COUNT}"
            )));
        }
        let random = (0..colors)
            .flat_map(|p| {
                (0..patterns).map(move |t| UvRef::Random {
                    palette_index: p,
                    pattern_id: t,
                })
            })
            .collect();
        Ok(TexturePool {
            random,
            web: Vec::new(),
        })
    }

    pub fn full() -> Self {
        Self::generated(PALETTE_SIZE, PATTERN_COUNT).expect("full catalog is in range")
    }

    pub fn with_web_images(mut self, count: usize) -> Self {
        self.web = (0..count).map(|index| UvRef::Web { index }).collect();
        self
    }

    pub fn count(&self, source: UvSource) -> usize {
        match source {
            UvSource::Original => 0,
            UvSource::WebImage => self.web.len(),
            UvSource::Random => self.random.len(),
        }
    }

    /// Uniform draw (with replacement) from the pool of the given kind.
    pub fn sample<R: Rng + ?Sized>(&self, source: UvSource, rng: &mut R) -> Result<UvRef> {
        let list = match source {
            UvSource::WebImage => &self.web,
            UvSource::Random => &self.random,
            UvSource::Original => {
                return Err(Error::Config("original textures are not drawn from a pool".into()))
            }
        };
        if list.is_empty() {
            return Err(Error::Config(format!("texture pool has no `{source}` entries")));
        }
        Ok(list[rng.gen_range(0..list.len())])
    }
}

/// Sorted list of importable images (`.png`, `.jpg`, `.jpeg`) in a directory.
pub fn list_web_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Materializes [`UvRef`]s at a fixed size, caching the results.
#[derive(Debug)]
pub struct TextureStore {
    composer: UvComposer,
    web_paths: Vec<PathBuf>,
    cache: Mutex<HashMap<UvRef, Arc<UvTextureMap>>>,
}

impl TextureStore {
    pub fn new(size: (u32, u32), web_paths: Vec<PathBuf>) -> Result<Self> {
        Ok(TextureStore {
            composer: UvComposer::new(size)?,
            web_paths,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn from_web_dir(size: (u32, u32), dir: Option<&Path>) -> Result<Self> {
        let paths = match dir {
            Some(d) => list_web_images(d)?,
            None => Vec::new(),
        };
        Self::new(size, paths)
    }

    pub fn web_count(&self) -> usize {
        self.web_paths.len()
    }

    pub fn size(&self) -> (u32, u32) {
        self.composer.size()
    }

    pub fn resolve(&self, uv: UvRef) -> Result<Arc<UvTextureMap>> {
        if let Some(hit) = self.cache.lock().expect("texture cache poisoned").get(&uv) {
            return Ok(hit.clone());
        }
        let map = match uv {
            UvRef::Web { index } => {
                let path = self.web_paths.get(index).ok_or_else(|| {
                    Error::Range(format!(
                        "web image {index} requested, {} available",
                        self.web_paths.len()
                    ))
                })?;
                let img = image::open(path)?.to_rgb8();
                import_image_as_uv(&img, self.composer.size())?
            }
            other => self.composer.compose_ref(other)?,
        };
        let map = Arc::new(map);
        self.cache
            .lock()
            .expect("texture cache poisoned")
            .insert(uv, map.clone());
        Ok(map)
    }
}
