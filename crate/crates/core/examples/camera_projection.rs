//! Projects the keypoints of a standing person through a bundled camera and
//! shows how a second person in front of them lowers visibility.

use std::path::Path;

use pedsynth::capture::{keypoints_of, AgentPose, EXPORTED_KEYPOINTS};
use pedsynth::optics::{load_cameras, project, visibility, Capsule, Projection};

fn main() -> pedsynth::Result<()> {
    let rigs = load_cameras(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/cameras.txt"))?;
    let rig = &rigs[0];
    println!(
        "camera {} at {:?} looking at {:?}, fov {:.1} deg, {}x{}",
        rig.id,
        rig.position.as_slice(),
        rig.look_at.as_slice(),
        rig.vertical_fov,
        rig.resolution.0,
        rig.resolution.1
    );

    // place the subject where the camera is looking
    let target = (rig.look_at.x, rig.look_at.z);
    let kps = keypoints_of(1.75, &AgentPose::neutral(target, 0.0));
    for (name, p) in EXPORTED_KEYPOINTS.iter().zip(&kps) {
        match project(rig, p)? {
            Projection::Front(ip) => println!("{name:11} u {:7.1} v {:7.1} depth {:5.2}", ip.u, ip.v, ip.depth),
            Projection::Behind => println!("{name:11} behind the camera"),
        }
    }
    println!("visibility alone: {:.3}", visibility(rig, &kps, &[]));

    // a second person a third of the way from the subject towards the camera
    let towards = (rig.position.x - target.0, rig.position.z - target.1);
    let blocker = (target.0 + towards.0 / 3.0, target.1 + towards.1 / 3.0);
    let occluder = Capsule::standing(blocker, 1.8, 0.7);
    println!("visibility with occluder: {:.3}", visibility(rig, &kps, &[occluder]));
    Ok(())
}
