//! Runs the crowd simulation of the bundled demo scene and prints the event
//! log, the peak occupancy and the planned path of the first leg.
//!
//!     cargo run --example walk_scene -- [seconds]

use std::path::Path;

use pedsynth::world::{load_scene, plan_path, step, AgentProfile, SimState};

fn main() -> pedsynth::Result<()> {
    let seconds: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60.0);
    let scene = load_scene(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/scenes/01_demo.scene"))?;
    println!(
        "scene {} grid {}x{} capacity {} destinations {}",
        scene.name,
        scene.walkable.width,
        scene.walkable.height,
        scene.capacity,
        scene.destinations.len()
    );

    if let [a, b, ..] = scene.destinations[..] {
        if let Some(p) = plan_path(&scene.walkable, a, b)? {
            println!("path {a:?} -> {b:?}: {} steps, cost {:.3}", p.steps(), p.cost);
        }
    }

    let queue = (1..=10).map(|id| AgentProfile { character_id: id, height_m: 1.55 + 0.03 * id as f64 });
    let mut sim = SimState::new(&scene, queue, 7)?;
    let dt = 1.0 / 24.0;
    let mut peak = 0;
    while sim.t < seconds && !sim.is_finished() {
        step(&mut sim, &scene, dt);
        peak = peak.max(sim.agents.len());
    }
    print!("{}", sim.log_text());
    println!("t {:.2} s, peak occupancy {peak}, waiting {}", sim.t, sim.spawn_queue.len());
    Ok(())
}
