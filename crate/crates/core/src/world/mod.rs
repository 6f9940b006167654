//! Scenes and the multi-agent walking simulation.

mod light;
mod path;
mod scene;
mod sim;

pub use light::{LightKey, LightSchedule, LightState, MAX_INTENSITY};
pub use path::{octile, plan_path, Cell, GridPath};
pub use scene::{load_scene, load_scenes, Grid, Scene};
pub use sim::{
    step, Agent, AgentProfile, EventKind, MoveMode, SimEvent, SimState, DEFAULT_SPAWN_DELAY_S,
    DEFAULT_VISITS,
};

pub fn lighting_at(scene: &Scene, t: f64) -> LightState {
    scene.lighting.at(t)
}
