//! Dataset layout, manifest, subsampling and statistics.
//!
//! Crops live in `<root>/images/` named
//! `{pid:06}_s{scene:02}_c{cam:02}_f{frame:07}.png`; the inventory is
//! `<root>/manifest.csv`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const IMAGES_DIR: &str = "images";
pub const MANIFEST_HEADER: [&str; 9] = ["pid", "scene", "cam", "frame", "file", "left", "top", "w", "h"];

pub fn crop_file_name(pid: u32, scene: u32, cam: u32, frame: u64) -> String {
    format!("{pid:06}_s{scene:02}_c{cam:02}_f{frame:07}.png")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryKey {
    pub pid: u32,
    pub scene: u32,
    pub cam: u32,
    pub frame: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub pid: u32,
    pub scene: u32,
    pub cam: u32,
    pub frame: u64,
    /// Path relative to the dataset root.
    pub file: String,
    pub left: u32,
    pub top: u32,
    pub w: u32,
    pub h: u32,
}

impl ManifestEntry {
    pub fn key(&self) -> EntryKey {
        EntryKey {
            pid: self.pid,
            scene: self.scene,
            cam: self.cam,
            frame: self.frame,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    /// Seed of the run or sample that produced the manifest.
    pub seed: Option<u64>,
    /// Sorted by (pid, scene, cam, frame).
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by_key(ManifestEntry::key);
        for w in entries.windows(2) {
            if w[0].key() == w[1].key() {
                return Err(Error::Integrity(format!("duplicate manifest entry {}", w[0].file)));
            }
        }
        Ok(Manifest { seed: None, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        if let Some(s) = self.seed {
            out.extend_from_slice(format!("# seed {s}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(MANIFEST_HEADER)?;
        for e in &self.entries {
            w.write_record([
                e.pid.to_string(),
                e.scene.to_string(),
                e.cam.to_string(),
                e.frame.to_string(),
                e.file.clone(),
                e.left.to_string(),
                e.top.to_string(),
                e.w.to_string(),
                e.h.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("manifest", e))?;
        drop(w);
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut body_start = 0;
        let mut skipped = 0;
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(c) => {
                    if let Some(v) = c.trim().strip_prefix("seed ") {
                        seed = Some(v.trim().parse().map_err(|_| Error::parse(skipped + 1, "bad seed comment"))?);
                    }
                    body_start += line.len() + 1;
                    skipped += 1;
                }
                None => break,
            }
        }
        let body = &text[body_start.min(text.len())..];
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers()?.clone();
        if header.iter().ne(MANIFEST_HEADER) {
            return Err(Error::parse(skipped + 1, format!("manifest header must be `{}`", MANIFEST_HEADER.join(","))));
        }
        let mut entries = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = skipped + i + 2;
            let rec = rec?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let int = |k: usize| -> Result<u64> {
                field(k)
                    .parse()
                    .map_err(|_| Error::parse(line, format!("column `{}` is not an integer", MANIFEST_HEADER[k])))
            };
            let small = |k: usize| -> Result<u32> {
                u32::try_from(int(k)?).map_err(|_| Error::parse(line, format!("column `{}` too large", MANIFEST_HEADER[k])))
            };
            entries.push(ManifestEntry {
                pid: small(0)?,
                scene: small(1)?,
                cam: small(2)?,
                frame: int(3)?,
                file: field(4).to_string(),
                left: small(5)?,
                top: small(6)?,
                w: small(7)?,
                h: small(8)?,
            });
        }
        let mut m = Manifest::new(entries)?;
        m.seed = seed;
        Ok(m)
    }
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Manifest::parse(&text)
}

pub fn write_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    crate::fsutil::write_if_changed(&root.join(MANIFEST_FILE), manifest.to_csv()?.as_bytes())?;
    Ok(())
}

/// One crop waiting to be stored.
#[derive(Debug, Clone)]
pub struct CropRecord {
    pub pid: u32,
    pub scene: u32,
    pub cam: u32,
    pub frame: u64,
    pub left: u32,
    pub top: u32,
    pub image: RgbImage,
}

impl CropRecord {
    fn entry(&self) -> ManifestEntry {
        ManifestEntry {
            pid: self.pid,
            scene: self.scene,
            cam: self.cam,
            frame: self.frame,
            file: format!("{IMAGES_DIR}/{}", crop_file_name(self.pid, self.scene, self.cam, self.frame)),
            left: self.left,
            top: self.top,
            w: self.image.width(),
            h: self.image.height(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembleReport {
    pub manifest: Manifest,
    pub written: usize,
    pub unchanged: usize,
}

enum Outcome {
    Written,
    Unchanged,
}

fn store(root: &Path, rec: &CropRecord, file: &str) -> Result<Outcome> {
    let path = root.join(file);
    let bytes = crate::fsutil::png_bytes(&rec.image)?;
    match std::fs::read(&path) {
        Ok(old) if old == bytes => return Ok(Outcome::Unchanged),
        Ok(_) => {
            let prev = image::open(&path)?.to_rgb8();
            if prev == rec.image {
                return Ok(Outcome::Unchanged);
            }
            return Err(Error::Integrity(format!("{file} exists with different pixels")));
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(Error::io(&path, e)),
    }
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(Outcome::Written)
}

/// Writes crops under `root` and merges them into the manifest there.
///
/// Re-running with the same crops writes nothing new. A crop whose name is
/// taken by different pixels or a different box is an integrity error.
/// `seed` is recorded in the manifest.
pub fn assemble(
    crops: impl IntoIterator<Item = CropRecord>,
    root: &Path,
    seed: Option<u64>,
) -> Result<AssembleReport> {
    let dir = root.join(IMAGES_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut existing: HashMap<EntryKey, ManifestEntry> = if root.join(MANIFEST_FILE).exists() {
        read_manifest(root)?.entries.into_iter().map(|e| (e.key(), e)).collect()
    } else {
        HashMap::new()
    };
    let mut batch: BTreeMap<EntryKey, CropRecord> = BTreeMap::new();
    for rec in crops {
        let e = rec.entry();
        if let Some(prev) = batch.get(&e.key()) {
            if prev.image != rec.image || (prev.left, prev.top) != (rec.left, rec.top) {
                return Err(Error::Integrity(format!("{} produced twice with different content", e.file)));
            }
            continue;
        }
        if let Some(old) = existing.get(&e.key()) {
            if *old != e {
                return Err(Error::Integrity(format!("{} already listed with a different box", e.file)));
            }
        }
        batch.insert(e.key(), rec);
    }
    let recs: Vec<(ManifestEntry, &CropRecord)> = batch.values().map(|r| (r.entry(), r)).collect();
    let outcomes: Vec<Result<Outcome>> = recs.par_iter().map(|(e, r)| store(root, r, &e.file)).collect();
    let (mut written, mut unchanged) = (0, 0);
    for o in outcomes {
        match o? {
            Outcome::Written => written += 1,
            Outcome::Unchanged => unchanged += 1,
        }
    }
    for (e, _) in recs {
        existing.insert(e.key(), e);
    }
    let mut manifest = Manifest::new(existing.into_values().collect())?;
    manifest.seed = seed;
    write_manifest(root, &manifest)?;
    Ok(AssembleReport {
        manifest,
        written,
        unchanged,
    })
}

/// Checks that every entry's file exists and matches its box size.
pub fn verify(root: &Path, manifest: &Manifest) -> Result<()> {
    manifest.entries.par_iter().try_for_each(|e| {
        let path: PathBuf = root.join(&e.file);
        if !path.is_file() {
            return Err(Error::Integrity(format!("missing file {}", e.file)));
        }
        let (w, h) = image::image_dimensions(&path)?;
        if (w, h) != (e.w, e.h) {
            return Err(Error::Integrity(format!(
                "{} is {w}x{h}, manifest says {}x{}",
                e.file, e.w, e.h
            )));
        }
        Ok(())
    })
}

/// Uniform sample without replacement that keeps every identity.
///
/// Each identity first keeps one random image; the remaining quota is drawn
/// uniformly from all other images.
pub fn subsample(manifest: &Manifest, target: usize, seed: u64) -> Result<Manifest> {
    let ids: BTreeSet<u32> = manifest.entries.iter().map(|e| e.pid).collect();
    if target < ids.len() {
        return Err(Error::Config(format!(
            "target {target} is below the identity count {}; cannot keep every identity",
            ids.len()
        )));
    }
    if target > manifest.len() {
        return Err(Error::Config(format!(
            "target {target} exceeds the {} available images",
            manifest.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut by_id: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        by_id.entry(e.pid).or_default().push(i);
    }
    let mut keep = Vec::with_capacity(target);
    let mut rest = Vec::with_capacity(manifest.len());
    for idx in by_id.values() {
        let pick = *idx.choose(&mut rng).expect("identity has images");
        keep.push(pick);
        rest.extend(idx.iter().copied().filter(|i| *i != pick));
    }
    let extra = target - keep.len();
    let (chosen, _) = rest.partial_shuffle(&mut rng, extra);
    keep.extend_from_slice(chosen);
    keep.sort_unstable();
    Ok(Manifest {
        seed: Some(seed),
        entries: keep.into_iter().map(|i| manifest.entries[i].clone()).collect(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub ids: usize,
    pub scenes: usize,
    pub cams: usize,
    /// Distinct (scene, camera) recordings.
    pub videos: usize,
    pub bboxes: usize,
    pub per_cam: BTreeMap<u32, usize>,
    pub per_id: BTreeMap<u32, usize>,
}

impl Stats {
    /// Identities seen by at least `n` distinct cameras.
    pub fn ids_with_cameras(manifest: &Manifest, n: usize) -> usize {
        let mut cams: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for e in &manifest.entries {
            cams.entry(e.pid).or_default().insert(e.cam);
        }
        cams.values().filter(|c| c.len() >= n).count()
    }
}

pub fn stats(manifest: &Manifest) -> Stats {
    let mut s = Stats::default();
    let mut scenes = BTreeSet::new();
    let mut videos = BTreeSet::new();
    for e in &manifest.entries {
        scenes.insert(e.scene);
        videos.insert((e.scene, e.cam));
        *s.per_cam.entry(e.cam).or_default() += 1;
        *s.per_id.entry(e.pid).or_default() += 1;
    }
    s.ids = s.per_id.len();
    s.scenes = scenes.len();
    s.cams = s.per_cam.len();
    s.videos = videos.len();
    s.bboxes = manifest.len();
    s
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ids scenes cams videos bboxes")?;
        writeln!(f, "{} {} {} {} {}", self.ids, self.scenes, self.cams, self.videos, self.bboxes)?;
        writeln!(f)?;
        writeln!(f, "cam bboxes")?;
        for (c, n) in &self.per_cam {
            writeln!(f, "{c} {n}")?;
        }
        writeln!(f)?;
        writeln!(f, "pid bboxes")?;
        for (p, n) in &self.per_id {
            writeln!(f, "{p} {n}")?;
        }
        Ok(())
    }
}
