//! Simulates the demo scene for a few seconds and renders what each of its
//! cameras sees at the last tick.
//!
//!     cargo run --release --example render_frame -- [out_dir]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pedsynth::capture::{AgentPose, PosedBody};
use pedsynth::optics::load_cameras;
use pedsynth::persona::{generate_population, PopulationSpec, SourceMix};
use pedsynth::render::{render_frame, Appearance, DEFAULT_RESOLUTION};
use pedsynth::texgen::{TexturePool, TextureStore};
use pedsynth::wardrobe::load_catalog;
use pedsynth::world::{lighting_at, load_scene, step, AgentProfile, SimState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pedsynth-render"));
    std::fs::create_dir_all(&out)?;
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    let catalog = load_catalog(&assets.join("catalog.tsv"))?;
    let scene = load_scene(&assets.join("scenes/01_demo.scene"))?;
    let rigs = load_cameras(&assets.join("cameras.txt"))?;

    let mix = SourceMix { original: 2, web_image: 0, random: 4 };
    let spec = PopulationSpec::new(mix.total(), mix, 3);
    let people = generate_population(&spec, &catalog, &TexturePool::full())?;
    let store = TextureStore::new((128, 128), Vec::new())?;
    let looks: HashMap<u32, Arc<Appearance>> = people
        .iter()
        .map(|c| Ok((c.id, Arc::new(Appearance::of(c, spec.skin_tones.len(), &store)?))))
        .collect::<pedsynth::Result<_>>()?;

    let queue = people.iter().map(|c| AgentProfile { character_id: c.id, height_m: c.height_cm / 100.0 });
    let mut sim = SimState::new(&scene, queue, 11)?;
    for _ in 0..24 * 12 {
        step(&mut sim, &scene, 1.0 / 24.0);
    }
    let bodies: Vec<PosedBody> = sim
        .agents
        .iter()
        .map(|a| PosedBody {
            character_id: a.character_id,
            height_m: a.height_m,
            weight_norm: people[a.character_id as usize - 1].weight_norm,
            pose: AgentPose::of(a),
        })
        .collect();
    let light = lighting_at(&scene, sim.t);
    println!("t {:.2} s, {} agents, light intensity {:.2}", sim.t, bodies.len(), light.intensity);

    for cam in &scene.cameras {
        let rig = rigs.iter().find(|r| r.id == *cam).expect("bundled camera").with_resolution(DEFAULT_RESOLUTION);
        let frame = render_frame(&scene, &bodies, &|id| looks.get(&id).cloned(), &rig, &light);
        let path = out.join(format!("c{cam:02}.png"));
        frame.write_png(&path)?;
        let covered = frame.depth.iter().filter(|d| d.is_finite()).count();
        println!("camera {cam}: {} finite depth pixels, wrote {}", covered, path.display());
    }
    Ok(())
}
