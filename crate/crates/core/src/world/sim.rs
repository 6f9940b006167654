//! Agent lifecycle and motion.
//!
//! Each step first spawns queued characters (one every `spawn_delay_s`
//! seconds while below capacity), then moves every live agent `speed * dt`
//! metres along its planned route. Reaching the end of a route counts as a
//! visit; the agent then heads to the next destination in the cycle, or
//! leaves the scene once it has made `visits_before_despawn` visits.
//! Agents pass through each other.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use rand::Rng;

use super::path::GridPath;
use super::scene::Scene;
use crate::error::Result;
use crate::rng::derive_rng;

pub const DEFAULT_SPAWN_DELAY_S: f64 = 3.0;
pub const DEFAULT_VISITS: u32 = 5;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveMode {
    WalkSlow,
    Walk,
    WalkFast,
    Jog,
    Run,
    Sprint,
}

impl MoveMode {
    pub const ALL: [MoveMode; 6] = [
        MoveMode::WalkSlow,
        MoveMode::Walk,
        MoveMode::WalkFast,
        MoveMode::Jog,
        MoveMode::Run,
        MoveMode::Sprint,
    ];

    /// Speed in m/s.
    pub fn speed(&self) -> f64 {
        match self {
            MoveMode::WalkSlow => 0.9,
            MoveMode::Walk => 1.2,
            MoveMode::WalkFast => 1.5,
            MoveMode::Jog => 2.5,
            MoveMode::Run => 3.0,
            MoveMode::Sprint => 3.5,
        }
    }

    pub fn is_running(&self) -> bool {
        matches!(self, MoveMode::Jog | MoveMode::Run | MoveMode::Sprint)
    }

    /// Distance covered by one full gait cycle for a body of `height_m`.
    pub fn stride(&self, height_m: f64) -> f64 {
        let k = if self.is_running() { 1.6 } else { 0.85 };
        k * height_m
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MoveMode::WalkSlow => "walk_slow",
            MoveMode::Walk => "walk",
            MoveMode::WalkFast => "walk_fast",
            MoveMode::Jog => "jog",
            MoveMode::Run => "run",
            MoveMode::Sprint => "sprint",
        }
    }
}

impl fmt::Display for MoveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the simulation needs to know about a queued character.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentProfile {
    pub character_id: u32,
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub character_id: u32,
    pub height_m: f64,
    /// Ground position `(x, z)` in metres.
    pub position: (f64, f64),
    /// Facing angle; forward is `(cos heading, sin heading)` in `(x, z)`.
    pub heading: f64,
    pub mode: MoveMode,
    /// Index of the destination currently being walked to.
    pub current_target: usize,
    pub visits_done: u32,
    /// Gait phase in `[0, 1)`.
    pub phase: f64,
    pub spawned_at: f64,
    route: VecDeque<(f64, f64)>,
}

impl Agent {
    pub fn speed(&self) -> f64 {
        self.mode.speed()
    }

    pub fn remaining_route(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.route.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Spawn { start: usize, mode: MoveMode },
    Arrive { destination: usize, visits: u32 },
    Despawn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub t: f64,
    pub character_id: u32,
    pub kind: EventKind,
}

impl fmt::Display for SimEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ", self.t)?;
        match &self.kind {
            EventKind::Spawn { start, mode } => {
                write!(f, "spawn {} start {start} mode {mode}", self.character_id)
            }
            EventKind::Arrive { destination, visits } => write!(
                f,
                "arrive {} dest {destination} visits {visits}",
                self.character_id
            ),
            EventKind::Despawn => write!(f, "despawn {}", self.character_id),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub agents: Vec<Agent>,
    pub spawn_queue: VecDeque<AgentProfile>,
    pub event_log: Vec<SimEvent>,
    pub seed: u64,
    last_spawn: Option<f64>,
    legs: Vec<Vec<(f64, f64)>>,
}

impl SimState {
    /// A simulation at `t = 0` with `queue` waiting to enter `scene`.
    pub fn new(scene: &Scene, queue: impl IntoIterator<Item = AgentProfile>, seed: u64) -> Result<Self> {
        scene.validate()?;
        let legs = scene
            .legs()?
            .into_iter()
            .map(|p: GridPath| {
                p.cells[1..]
                    .iter()
                    .map(|c| scene.walkable.center(*c))
                    .collect()
            })
            .collect();
        Ok(SimState {
            t: 0.0,
            agents: Vec::new(),
            spawn_queue: queue.into_iter().collect(),
            event_log: Vec::new(),
            seed,
            last_spawn: None,
            legs,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.agents.is_empty() && self.spawn_queue.is_empty()
    }

    /// The event log, one event per line.
    pub fn log_text(&self) -> String {
        let mut s = String::new();
        for e in &self.event_log {
            let _ = writeln!(s, "{e}");
        }
        s
    }

    fn spawn(&mut self, scene: &Scene, profile: AgentProfile) -> SimEvent {
        let n = scene.destinations.len();
        let mut rng = derive_rng(self.seed, profile.character_id as u64);
        let start = rng.gen_range(0..n);
        let mode = MoveMode::ALL[rng.gen_range(0..MoveMode::ALL.len())];
        let phase = rng.gen::<f64>();
        let position = scene.walkable.center(scene.destinations[start]);
        let route: VecDeque<_> = self.legs[start].iter().copied().collect();
        let heading = route
            .front()
            .map(|&(x, z)| (z - position.1).atan2(x - position.0))
            .unwrap_or(0.0);
        self.agents.push(Agent {
            character_id: profile.character_id,
            height_m: profile.height_m,
            position,
            heading,
            mode,
            current_target: (start + 1) % n,
            visits_done: 0,
            phase,
            spawned_at: self.t,
            route,
        });
        self.last_spawn = Some(self.t);
        SimEvent {
            t: self.t,
            character_id: profile.character_id,
            kind: EventKind::Spawn { start, mode },
        }
    }
}

/// Advances the simulation by `dt` seconds and returns the events raised.
/// A non-positive `dt` is a no-op.
pub fn step(sim: &mut SimState, scene: &Scene, dt: f64) -> Vec<SimEvent> {
    let mut events = Vec::new();
    if dt <= 0.0 || !dt.is_finite() {
        return events;
    }
    while sim.agents.len() < scene.capacity {
        let ready = sim
            .last_spawn
            .map_or(true, |last| sim.t - last >= scene.spawn_delay_s - TIME_EPS);
        if !ready {
            break;
        }
        let Some(profile) = sim.spawn_queue.pop_front() else {
            break;
        };
        events.push(sim.spawn(scene, profile));
    }

    let n = scene.destinations.len();
    let t0 = sim.t;
    let mut leaving = Vec::new();
    for (ai, agent) in sim.agents.iter_mut().enumerate() {
        let speed = agent.speed();
        let mut budget = speed * dt;
        let mut travelled = 0.0;
        while budget > 0.0 {
            let Some(&(wx, wz)) = agent.route.front() else {
                break;
            };
            let (dx, dz) = (wx - agent.position.0, wz - agent.position.1);
            let dist = (dx * dx + dz * dz).sqrt();
            if dist > 0.0 {
                agent.heading = dz.atan2(dx);
            }
            if dist <= budget {
                agent.position = (wx, wz);
                budget -= dist;
                travelled += dist;
                agent.route.pop_front();
                if agent.route.is_empty() {
                    agent.visits_done += 1;
                    let at = t0 + travelled / speed;
                    events.push(SimEvent {
                        t: at,
                        character_id: agent.character_id,
                        kind: EventKind::Arrive {
                            destination: agent.current_target,
                            visits: agent.visits_done,
                        },
                    });
                    if agent.visits_done >= scene.visits_before_despawn {
                        events.push(SimEvent {
                            t: at,
                            character_id: agent.character_id,
                            kind: EventKind::Despawn,
                        });
                        leaving.push(ai);
                        break;
                    }
                    agent.route = sim.legs[agent.current_target].iter().copied().collect();
                    agent.current_target = (agent.current_target + 1) % n;
                }
            } else {
                let k = budget / dist;
                agent.position = (agent.position.0 + dx * k, agent.position.1 + dz * k);
                travelled += budget;
                budget = 0.0;
            }
        }
        let stride = agent.mode.stride(agent.height_m);
        agent.phase = (agent.phase + travelled / stride).rem_euclid(1.0);
    }
    for ai in leaving.into_iter().rev() {
        sim.agents.remove(ai);
    }
    sim.t = t0 + dt;
    sim.event_log.extend(events.iter().cloned());
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor() -> Scene {
        Scene::parse(
            "scene 1 corridor\ngrid 8 1 1.0\n........\ndest 0 0\ndest 7 0\ncapacity 3\nspawn_delay 2\nvisits 2\n",
        )
        .unwrap()
    }

    fn queue(n: u32) -> Vec<AgentProfile> {
        (0..n)
            .map(|character_id| AgentProfile {
                character_id,
                height_m: 1.7,
            })
            .collect()
    }

    fn place(sim: &mut SimState, scene: &Scene, mode: MoveMode, at: (f64, f64)) {
        let mut st = SimState::new(scene, queue(1), sim.seed).unwrap();
        step(&mut st, scene, 1e-12);
        let mut a = st.agents.pop().unwrap();
        a.mode = mode;
        a.position = at;
        a.route = [scene.walkable.center((7, 0))].into_iter().collect();
        a.current_target = 1;
        sim.agents = vec![a];
        sim.spawn_queue.clear();
    }

    #[test]
    fn arrival_within_step() {
        let scene = corridor();
        let mut sim = SimState::new(&scene, vec![], 1).unwrap();
        // 1.0 m short of the last waypoint at 1.2 m/s
        place(&mut sim, &scene, MoveMode::Walk, (6.5, 0.5));
        let ev = step(&mut sim, &scene, 1.0);
        assert!(matches!(ev[0].kind, EventKind::Arrive { destination: 1, visits: 1 }));
        assert!((ev[0].t - 1.0 / 1.2).abs() < 1e-12);
    }

    #[test]
    fn split_steps_match() {
        let scene = corridor();
        let mut a = SimState::new(&scene, vec![], 3).unwrap();
        place(&mut a, &scene, MoveMode::WalkFast, (1.5, 0.5));
        let mut b = a.clone();
        for _ in 0..40 {
            step(&mut a, &scene, 0.05);
            step(&mut b, &scene, 0.025);
            step(&mut b, &scene, 0.025);
            for (x, y) in a.agents.iter().zip(&b.agents) {
                assert!((x.position.0 - y.position.0).abs() < 1e-9);
                assert!((x.position.1 - y.position.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn capacity_and_spawn_gaps() {
        let scene = corridor();
        let mut sim = SimState::new(&scene, queue(10), 11).unwrap();
        for _ in 0..(120.0 / 0.05) as usize {
            step(&mut sim, &scene, 0.05);
            assert!(sim.agents.len() <= 3);
        }
        let spawns: Vec<f64> = sim
            .event_log
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Spawn { .. }))
            .map(|e| e.t)
            .collect();
        assert_eq!(spawns.len(), 10);
        for w in spawns.windows(2) {
            assert!(w[1] - w[0] >= scene.spawn_delay_s - 1e-9);
        }
        assert!(sim.is_finished());
    }

    #[test]
    fn log_is_deterministic() {
        let scene = corridor();
        let run = || {
            let mut sim = SimState::new(&scene, queue(6), 99).unwrap();
            for _ in 0..1200 {
                step(&mut sim, &scene, 1.0 / 24.0);
            }
            sim.log_text()
        };
        assert_eq!(run(), run());
    }
}
