//! Keypoint annotation and person crops: two people stand in front of a
//! camera, the frame is annotated and rendered, and every detection accepted
//! by the default policy is cut out.
//!
//!     cargo run --example crop_person -- [out_dir]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pedsynth::capture::{
    annotate_frame, annotations_to_string, crop_box, extract_crop, AgentPose, DetectionPolicy, PosedBody,
    VIDEO_FPS,
};
use pedsynth::optics::load_cameras;
use pedsynth::render::{render_frame, Appearance};
use pedsynth::world::{load_scene, LightState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pedsynth-crops"));
    std::fs::create_dir_all(&out)?;

    // keypoints spanning 100 px by 30 px give a 120 px tall, 50 px wide box
    let b = crop_box(&[(240.0, 200.0), (270.0, 300.0)], 1920, 1080)?;
    println!("box left {} top {} {}x{}", b.left, b.top, b.width, b.height);

    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    let scene = load_scene(&assets.join("scenes/01_demo.scene"))?;
    let rig = load_cameras(&assets.join("cameras.txt"))?
        .into_iter()
        .find(|r| r.id == scene.cameras[0])
        .expect("bundled camera")
        .with_resolution((480, 270));

    let target = (rig.look_at.x, rig.look_at.z);
    let bodies = [
        PosedBody { character_id: 1, height_m: 1.72, weight_norm: 0.4, pose: AgentPose::neutral(target, 0.0) },
        PosedBody {
            character_id: 2,
            height_m: 1.64,
            weight_norm: 0.6,
            pose: AgentPose::neutral((target.0 + 1.2, target.1 + 0.5), 1.0),
        },
    ];
    let ann = annotate_frame(&rig, 0, 0.0, &bodies);
    print!("{}", annotations_to_string(std::slice::from_ref(&ann), VIDEO_FPS)?);

    let looks = [
        Arc::new(Appearance::flat(1, [200, 160, 130], [40, 70, 160])),
        Arc::new(Appearance::flat(2, [120, 85, 60], [170, 50, 40])),
    ];
    let frame = render_frame(&scene, &bodies, &|id| looks.get(id as usize - 1).cloned(), &rig, &LightState::default());
    frame.write_png(&out.join("frame.png"))?;

    let policy = DetectionPolicy::default();
    for a in &ann.agents {
        let b = crop_box(&a.projected(), rig.resolution.0, rig.resolution.1)?;
        let ok = policy.accepts(&b, a.visibility);
        println!(
            "agent {} visibility {:.2} box {}x{} at ({}, {}) {}",
            a.character_id,
            a.visibility,
            b.width,
            b.height,
            b.left,
            b.top,
            if ok { "accepted" } else { "rejected" }
        );
        if ok {
            let path = out.join(format!("agent_{}.png", a.character_id));
            extract_crop(&frame.pixels, &b.pixel_box())?.save(&path)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}
