//! The pipeline stages behind each subcommand.
//!
//! Output layout under `paths.out`:
//!
//! ```text
//! textures/{uv_id}.png, textures/manifest.csv
//! characters/char_000001.txt, characters/population.csv
//! scenes/s01_plaza/events.log
//! scenes/s01_plaza/c01/annotations.txt
//! scenes/s01_plaza/c01/frames/f0000012.png
//! scenes/s01_plaza/crops/{images/, manifest.csv}
//! dataset/{images/, manifest.csv}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::capture::{
    annotate_frame, annotations_to_string, crop_box, extract_crop, read_annotations, sample_frames, AgentPose,
    DetectionPolicy, FrameAnnotation, PosedBody,
};
use crate::datasetio::{self, CropRecord, Manifest, Stats};
use crate::error::{Error, Result};
use crate::evalkit::{self, EvalInput, EvalResult};
use crate::fsutil::{png_bytes, write_if_changed};
use crate::optics::{load_cameras, CameraRig};
use crate::persona::{generate_population, read_population, write_population, Character};
use crate::render::{render_frame, Appearance};
use crate::rng::derive_seed;
use crate::texgen::{
    import_image_as_uv, list_web_images, manifest_header, manifest_line, TexturePool, TextureStore, UvComposer,
    UvRef, UvSource,
};
use crate::wardrobe::{load_catalog, Catalog};
use crate::world::{lighting_at, load_scenes, step, AgentProfile, Scene, SimState};

/// Salt separating scene simulation streams from character streams.
const SCENE_STREAM: u64 = 0x5CE4_E000;

/// Config plus the inputs it points at.
pub struct Context {
    pub config: RunConfig,
    pub catalog: Catalog,
    pub rigs: BTreeMap<u32, CameraRig>,
    /// Every scene in `scenes_dir`, by index.
    pub all_scenes: Vec<Scene>,
}

impl Context {
    pub fn load(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let catalog = load_catalog(&config.paths.catalog)?;
        let rigs: BTreeMap<u32, CameraRig> = load_cameras(&config.paths.cameras)?
            .into_iter()
            .map(|r| (r.id, r))
            .collect();
        let all_scenes = load_scenes(&config.paths.scenes_dir)?;
        let mut bad = Vec::new();
        for s in &all_scenes {
            for c in &s.cameras {
                if !rigs.contains_key(c) {
                    bad.push(format!("scene `{}` uses undefined camera {c}", s.name));
                }
            }
        }
        for name in config.scenes.iter().chain(config.scene.keys()) {
            if !all_scenes.iter().any(|s| &s.name == name) {
                bad.push(format!("scene `{name}` is not in {}", config.paths.scenes_dir.display()));
            }
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad.join("; ")));
        }
        Ok(Context {
            config,
            catalog,
            rigs,
            all_scenes,
        })
    }

    /// Scenes of the run, in index order.
    pub fn run_scenes(&self) -> Vec<&Scene> {
        self.all_scenes
            .iter()
            .filter(|s| self.config.scenes.is_empty() || self.config.scenes.contains(&s.name))
            .collect()
    }

    /// The named run scenes, or all of them when `names` is empty.
    pub fn select(&self, names: &[String]) -> Result<Vec<&Scene>> {
        let run = self.run_scenes();
        if names.is_empty() {
            return Ok(run);
        }
        let mut out = Vec::new();
        for n in names {
            match run.iter().find(|s| &s.name == n) {
                Some(s) => out.push(*s),
                None => return Err(Error::Config(format!("scene `{n}` is not part of this run"))),
            }
        }
        out.sort_by_key(|s| s.index);
        out.dedup_by_key(|s| s.index);
        Ok(out)
    }

    /// Character ids assigned to `scene`: round robin over the run scenes.
    pub fn ids_for(&self, scene: &Scene) -> Vec<u32> {
        let run = self.run_scenes();
        let k = run.iter().position(|s| s.index == scene.index).unwrap_or(0);
        (1..=self.config.population.total as u32)
            .filter(|id| (*id as usize - 1) % run.len() == k)
            .collect()
    }

    pub fn out(&self) -> &Path {
        &self.config.paths.out
    }

    pub fn characters_dir(&self) -> PathBuf {
        self.out().join("characters")
    }

    pub fn scene_dir(&self, scene: &Scene) -> PathBuf {
        self.out().join("scenes").join(format!("s{:02}_{}", scene.index, scene.name))
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.out().join("dataset")
    }

    fn texture_store(&self) -> Result<TextureStore> {
        let s = self.config.textures.render_size;
        TextureStore::from_web_dir((s, s), self.config.paths.textures_dir.as_deref())
    }

    fn texture_pool(&self) -> Result<TexturePool> {
        let t = &self.config.textures;
        let web = match &self.config.paths.textures_dir {
            Some(d) => list_web_images(d)?.len(),
            None => 0,
        };
        Ok(TexturePool::generated(t.colors, t.patterns)?.with_web_images(web))
    }
}

pub fn cam_dir(scene_dir: &Path, cam: u32) -> PathBuf {
    scene_dir.join(format!("c{cam:02}"))
}

pub fn frame_file(scene_dir: &Path, cam: u32, frame: u64) -> PathBuf {
    cam_dir(scene_dir, cam).join("frames").join(format!("f{frame:07}.png"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TexturesSummary {
    pub maps: usize,
    pub written: usize,
}

/// Writes the generated maps (and any web images) as PNGs with a manifest.
pub fn cmd_gen_textures(config: &RunConfig) -> Result<TexturesSummary> {
    let t = &config.textures;
    let dir = config.paths.out.join("textures");
    let composer = UvComposer::new((t.size, t.size))?;
    let pool = TexturePool::generated(t.colors, t.patterns)?;
    let web = match &config.paths.textures_dir {
        Some(d) => list_web_images(d)?,
        None => Vec::new(),
    };
    let refs: Vec<UvRef> = pool
        .random
        .iter()
        .cloned()
        .chain((0..web.len()).map(|index| UvRef::Web { index }))
        .collect();
    let results: Vec<Result<(String, bool)>> = refs
        .par_iter()
        .map(|r| {
            let map = match r {
                UvRef::Web { index } => import_image_as_uv(&image::open(&web[*index])?.to_rgb8(), (t.size, t.size))?,
                other => composer.compose_ref(other.clone())?,
            };
            let id = r.id();
            let written = write_if_changed(&dir.join(format!("{id}.png")), &png_bytes(&map.to_image())?)?;
            Ok((manifest_line(&id, &map), written))
        })
        .collect();
    let mut manifest = format!("# seed {}\n{}\n", config.seed, manifest_header());
    let mut written = 0;
    for r in results {
        let (line, w) = r?;
        manifest.push_str(&line);
        manifest.push('\n');
        written += w as usize;
    }
    write_if_changed(&dir.join("manifest.csv"), manifest.as_bytes())?;
    log::info!("textures: {} maps, {written} written", refs.len());
    Ok(TexturesSummary {
        maps: refs.len(),
        written,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharactersSummary {
    pub characters: usize,
    pub original: usize,
    pub web_image: usize,
    pub random: usize,
}

pub fn cmd_gen_characters(ctx: &Context) -> Result<CharactersSummary> {
    let spec = ctx.config.population_spec();
    let population = generate_population(&spec, &ctx.catalog, &ctx.texture_pool()?)?;
    write_population(&population, ctx.config.seed, &ctx.characters_dir())?;
    let count = |s: UvSource| population.iter().filter(|c| c.texture_source() == s).count();
    log::info!("characters: {} written", population.len());
    Ok(CharactersSummary {
        characters: population.len(),
        original: count(UvSource::Original),
        web_image: count(UvSource::WebImage),
        random: count(UvSource::Random),
    })
}

fn load_characters(ctx: &Context) -> Result<Vec<Character>> {
    let dir = ctx.characters_dir();
    if !dir.join("population.csv").is_file() {
        return Err(Error::Config(format!(
            "no population in {}; run gen-characters first",
            dir.display()
        )));
    }
    read_population(&dir, &ctx.catalog)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub scene: String,
    pub agents: usize,
    pub events: usize,
    pub frames: u64,
    pub rendered: usize,
}

/// Everything simulated for one scene, before anything is written.
pub struct SceneRecording {
    pub events: String,
    /// Per camera id, one annotation per frame.
    pub annotations: BTreeMap<u32, Vec<FrameAnnotation>>,
    /// Bodies at each sampled frame.
    pub sampled: Vec<(u64, f64, Vec<PosedBody>)>,
    pub frames: u64,
}

/// Runs the simulation of `scene` with the characters `cast` and annotates
/// every frame for every rig.
pub fn record_scene(
    scene: &Scene,
    cast: &[&Character],
    rigs: &[CameraRig],
    seed: u64,
    duration_s: f64,
    interval_s: f64,
    fps: f64,
) -> Result<SceneRecording> {
    let sampled: BTreeSet<u64> = sample_frames(duration_s, fps, interval_s)?.into_iter().collect();
    let weights: HashMap<u32, f64> = cast.iter().map(|c| (c.id, c.weight_norm)).collect();
    let queue = cast.iter().map(|c| AgentProfile {
        character_id: c.id,
        height_m: c.height_cm / 100.0,
    });
    let mut sim = SimState::new(scene, queue, seed)?;
    let last = (duration_s * fps + 1e-9).floor() as u64;
    let mut annotations: BTreeMap<u32, Vec<FrameAnnotation>> = rigs.iter().map(|r| (r.id, Vec::new())).collect();
    let mut shots = Vec::new();
    for k in 0..=last {
        let t = k as f64 / fps;
        let bodies: Vec<PosedBody> = sim
            .agents
            .iter()
            .map(|a| PosedBody {
                character_id: a.character_id,
                height_m: a.height_m,
                weight_norm: weights.get(&a.character_id).copied().unwrap_or(0.5),
                pose: AgentPose::of(a),
            })
            .collect();
        for rig in rigs {
            annotations
                .get_mut(&rig.id)
                .expect("rig listed")
                .push(annotate_frame(rig, k, t, &bodies));
        }
        if sampled.contains(&k) {
            shots.push((k, t, bodies));
        }
        step(&mut sim, scene, 1.0 / fps);
    }
    Ok(SceneRecording {
        events: sim.log_text(),
        annotations,
        sampled: shots,
        frames: last + 1,
    })
}

fn scene_rigs(ctx: &Context, scene: &Scene) -> Vec<CameraRig> {
    let r = &ctx.config.render;
    scene
        .cameras
        .iter()
        .map(|c| ctx.rigs[c].with_resolution((r.width, r.height)))
        .collect()
}

fn simulate_scene(ctx: &Context, scene: &Scene, characters: &[Character], store: &TextureStore) -> Result<SimulateSummary> {
    let cfg = &ctx.config;
    let scene = cfg.apply_overrides(scene)?;
    let ids: BTreeSet<u32> = ctx.ids_for(&scene).into_iter().collect();
    let cast: Vec<&Character> = characters.iter().filter(|c| ids.contains(&c.id)).collect();
    let rigs = scene_rigs(ctx, &scene);
    let rec = record_scene(
        &scene,
        &cast,
        &rigs,
        derive_seed(cfg.seed, SCENE_STREAM + scene.index as u64),
        cfg.duration_for(&scene.name),
        cfg.interval_for(&scene.name),
        cfg.capture.fps,
    )?;
    let tones = cfg.population_spec().skin_tones.len();
    let looks: HashMap<u32, Arc<Appearance>> = cast
        .iter()
        .map(|c| Ok((c.id, Arc::new(Appearance::of(c, tones, store)?))))
        .collect::<Result<_>>()?;
    let dir = ctx.scene_dir(&scene);
    write_if_changed(&dir.join("events.log"), rec.events.as_bytes())?;
    for (cam, frames) in &rec.annotations {
        let text = annotations_to_string(frames, cfg.capture.fps)?;
        write_if_changed(&cam_dir(&dir, *cam).join("annotations.txt"), text.as_bytes())?;
    }
    let jobs: Vec<(&CameraRig, &(u64, f64, Vec<PosedBody>))> =
        rec.sampled.iter().flat_map(|s| rigs.iter().map(move |r| (r, s))).collect();
    let lookup = |id: u32| looks.get(&id).cloned();
    jobs.par_iter().try_for_each(|(rig, (k, t, bodies))| {
        let frame = render_frame(&scene, bodies, &lookup, rig, &lighting_at(&scene, *t));
        write_if_changed(&frame_file(&dir, rig.id, *k), &png_bytes(&frame.pixels)?).map(|_| ())
    })?;
    let agents = rec.events.lines().filter(|l| l.contains(" spawn ")).count();
    log::info!("scene {}: {agents} agents, {} frames rendered", scene.name, jobs.len());
    Ok(SimulateSummary {
        scene: scene.name.clone(),
        agents,
        events: rec.events.lines().count(),
        frames: rec.frames,
        rendered: jobs.len(),
    })
}

pub fn cmd_simulate(ctx: &Context, scenes: &[String]) -> Result<Vec<SimulateSummary>> {
    let characters = load_characters(ctx)?;
    let store = ctx.texture_store()?;
    let selected = ctx.select(scenes)?;
    selected
        .par_iter()
        .map(|s| simulate_scene(ctx, s, &characters, &store))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CropSummary {
    pub scene: String,
    pub crops: usize,
    pub rejected: usize,
}

/// Boxes and crops for the agents of one annotated frame. Agents with a
/// keypoint behind the camera, a degenerate box, or failing `policy` are
/// counted as rejected.
pub fn crops_for_frame(
    frame: &image::RgbImage,
    ann: &FrameAnnotation,
    scene: u32,
    cam: u32,
    policy: &DetectionPolicy,
) -> Result<(Vec<CropRecord>, usize)> {
    let mut out = Vec::new();
    let mut rejected = 0;
    for a in &ann.agents {
        if !a.all_in_front() {
            rejected += 1;
            continue;
        }
        let b = match crop_box(&a.projected(), frame.width(), frame.height()) {
            Ok(b) => b,
            Err(Error::Degenerate(_)) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if !policy.accepts(&b, a.visibility) {
            rejected += 1;
            continue;
        }
        out.push(CropRecord {
            pid: a.character_id,
            scene,
            cam,
            frame: ann.frame_index,
            left: b.left,
            top: b.top,
            image: extract_crop(frame, &b.pixel_box())?,
        });
    }
    Ok((out, rejected))
}

fn crop_scene(ctx: &Context, scene: &Scene) -> Result<CropSummary> {
    let cfg = &ctx.config;
    let dir = ctx.scene_dir(scene);
    let sampled: BTreeSet<u64> = sample_frames(
        cfg.duration_for(&scene.name),
        cfg.capture.fps,
        cfg.interval_for(&scene.name),
    )?
    .into_iter()
    .collect();
    let policy = DetectionPolicy::default();
    let mut jobs = Vec::new();
    for cam in &scene.cameras {
        let path = cam_dir(&dir, *cam).join("annotations.txt");
        if !path.is_file() {
            return Err(Error::Config(format!("{} missing; run simulate first", path.display())));
        }
        let (_, frames) = read_annotations(&path)?;
        jobs.extend(
            frames
                .into_iter()
                .filter(|f| sampled.contains(&f.frame_index) && !f.agents.is_empty())
                .map(|f| (*cam, f)),
        );
    }
    let results: Vec<Result<(Vec<CropRecord>, usize)>> = jobs
        .par_iter()
        .map(|(cam, f)| {
            let img = image::open(frame_file(&dir, *cam, f.frame_index))?.to_rgb8();
            crops_for_frame(&img, f, scene.index, *cam, &policy)
        })
        .collect();
    let mut records = Vec::new();
    let mut rejected = 0;
    for r in results {
        let (recs, rej) = r?;
        records.extend(recs);
        rejected += rej;
    }
    let crops_dir = dir.join("crops");
    let crops = records.len();
    // crops of this scene are derived data: if an earlier run left different
    // ones behind, start over instead of reporting a conflict
    let report = match datasetio::assemble(records.clone(), &crops_dir, Some(cfg.seed)) {
        Ok(r) if r.manifest.len() == crops => r,
        Ok(_) | Err(Error::Integrity(_)) => {
            std::fs::remove_dir_all(&crops_dir).map_err(|e| Error::io(&crops_dir, e))?;
            datasetio::assemble(records, &crops_dir, Some(cfg.seed))?
        }
        Err(e) => return Err(e),
    };
    log::info!("scene {}: {} crops, {rejected} rejected", scene.name, report.manifest.len());
    Ok(CropSummary {
        scene: scene.name.clone(),
        crops,
        rejected,
    })
}

pub fn cmd_crop(ctx: &Context, scenes: &[String]) -> Result<Vec<CropSummary>> {
    ctx.select(scenes)?.par_iter().map(|s| crop_scene(ctx, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssembleSummary {
    pub bboxes: usize,
    pub written: usize,
    pub unchanged: usize,
    pub subsample: Option<usize>,
}

/// Merges the crops of every run scene into `dataset/`; with `target`, also
/// writes an identity-stratified sample to `dataset/subsample.csv`.
pub fn cmd_assemble(ctx: &Context, target: Option<usize>) -> Result<AssembleSummary> {
    let mut records = Vec::new();
    for scene in ctx.run_scenes() {
        let crops_dir = ctx.scene_dir(scene).join("crops");
        if !crops_dir.join(datasetio::MANIFEST_FILE).is_file() {
            return Err(Error::Config(format!(
                "no crops for scene `{}`; run crop first",
                scene.name
            )));
        }
        let m = datasetio::read_manifest(&crops_dir)?;
        let loaded: Vec<Result<CropRecord>> = m
            .entries
            .par_iter()
            .map(|e| {
                Ok(CropRecord {
                    pid: e.pid,
                    scene: e.scene,
                    cam: e.cam,
                    frame: e.frame,
                    left: e.left,
                    top: e.top,
                    image: image::open(crops_dir.join(&e.file))?.to_rgb8(),
                })
            })
            .collect();
        for r in loaded {
            records.push(r?);
        }
    }
    let root = ctx.dataset_dir();
    let report = datasetio::assemble(records, &root, Some(ctx.config.seed))?;
    datasetio::verify(&root, &report.manifest)?;
    let subsample = match target {
        Some(n) => {
            let s = datasetio::subsample(&report.manifest, n, ctx.config.seed)?;
            write_if_changed(&root.join("subsample.csv"), s.to_csv()?.as_bytes())?;
            Some(s.len())
        }
        None => None,
    };
    log::info!("dataset: {} bboxes, {} new files", report.manifest.len(), report.written);
    Ok(AssembleSummary {
        bboxes: report.manifest.len(),
        written: report.written,
        unchanged: report.unchanged,
        subsample,
    })
}

/// Statistics of a manifest file, or of `manifest.csv` inside a directory.
pub fn cmd_stats(path: &Path) -> Result<Stats> {
    let m = if path.is_dir() {
        datasetio::read_manifest(path)?
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text)?
    };
    Ok(datasetio::stats(&m))
}

pub fn cmd_eval(distmat: &Path, query: &Path, gallery: &Path, max_rank: usize) -> Result<EvalResult> {
    let input = EvalInput {
        distmat: evalkit::read_distmat(distmat)?,
        query: evalkit::read_labels(query)?,
        gallery: evalkit::read_labels(gallery)?,
    };
    evalkit::evaluate(&input, max_rank)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub characters: CharactersSummary,
    pub scenes: Vec<SimulateSummary>,
    pub crops: Vec<CropSummary>,
    pub dataset: AssembleSummary,
    pub stats: Stats,
}

/// Characters, every run scene, crops, dataset and statistics.
pub fn cmd_run(ctx: &Context) -> Result<RunSummary> {
    let characters = cmd_gen_characters(ctx)?;
    let scenes = cmd_simulate(ctx, &[])?;
    let crops = cmd_crop(ctx, &[])?;
    let dataset = cmd_assemble(ctx, None)?;
    let stats = cmd_stats(&ctx.dataset_dir())?;
    Ok(RunSummary {
        characters,
        scenes,
        crops,
        dataset,
        stats,
    })
}
