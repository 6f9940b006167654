//! Per-frame keypoint annotations.
//!
//! ```text
//! fps 24
//! frame <idx> <t> agent <char_id> <vis_frac> kp <name> <x> <y> <z> <u> <v> <depth> <visible> ...
//! ```
//!
//! One line per (frame, agent) with the seven `kp` groups inline; a frame
//! without agents is a bare `frame <idx> <t>` line. Keypoints behind the
//! camera carry `-` for `u v depth`. Floats use shortest round-trip
//! formatting, so reading a written file reproduces the records exactly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::skeleton::{PosedBody, EXPORTED_KEYPOINTS};
use super::frame_index;
use crate::error::{Error, Result};
use crate::optics::{in_frustum, project, visibility, CameraRig, Capsule, ImagePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct KeypointRecord {
    pub name: String,
    pub world: [f64; 3],
    /// `None` when the keypoint is behind the camera.
    pub image: Option<ImagePoint>,
    /// Inside the frustum and not occluded by another agent.
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentAnnotation {
    pub character_id: u32,
    /// Share of keypoints with a clear line of sight.
    pub visibility: f64,
    pub keypoints: Vec<KeypointRecord>,
}

impl AgentAnnotation {
    /// Image coordinates of the keypoints in front of the camera.
    pub fn projected(&self) -> Vec<(f64, f64)> {
        self.keypoints
            .iter()
            .filter_map(|k| k.image.map(|p| (p.u, p.v)))
            .collect()
    }

    pub fn all_in_front(&self) -> bool {
        self.keypoints.iter().all(|k| k.image.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnnotation {
    pub frame_index: u64,
    pub time_s: f64,
    pub agents: Vec<AgentAnnotation>,
}

/// Annotates the bodies seen by `rig`. Agents with no keypoint inside the
/// frustum are left out; the others occlude each other as capsules.
pub fn annotate_frame(
    rig: &CameraRig,
    frame_index: u64,
    time_s: f64,
    bodies: &[PosedBody],
) -> FrameAnnotation {
    let capsules: Vec<Capsule> = bodies.iter().map(PosedBody::capsule).collect();
    let mut agents = Vec::new();
    for (i, body) in bodies.iter().enumerate() {
        let kps = body.keypoints();
        if !kps.iter().any(|p| in_frustum(rig, p)) {
            continue;
        }
        let others: Vec<Capsule> = capsules
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| *c)
            .collect();
        let keypoints = kps
            .iter()
            .zip(EXPORTED_KEYPOINTS)
            .map(|(p, name)| KeypointRecord {
                name: name.to_string(),
                world: [p.x, p.y, p.z],
                image: project(rig, p).ok().and_then(|pr| pr.front()),
                visible: in_frustum(rig, p) && visibility(rig, &[*p], &others) == 1.0,
            })
            .collect();
        agents.push(AgentAnnotation {
            character_id: body.character_id,
            visibility: visibility(rig, &kps, &others),
            keypoints,
        });
    }
    FrameAnnotation {
        frame_index,
        time_s,
        agents,
    }
}

fn check_order(frames: &[FrameAnnotation], fps: f64) -> Result<()> {
    let mut prev: Option<u64> = None;
    for f in frames {
        if prev.is_some_and(|p| f.frame_index <= p) {
            return Err(Error::Validation(format!(
                "annotation frames out of order at frame {}",
                f.frame_index
            )));
        }
        if frame_index(f.time_s, fps) != f.frame_index {
            return Err(Error::Validation(format!(
                "frame {} does not match time {} at {fps} fps",
                f.frame_index, f.time_s
            )));
        }
        prev = Some(f.frame_index);
    }
    Ok(())
}

pub fn annotations_to_string(frames: &[FrameAnnotation], fps: f64) -> Result<String> {
    check_order(frames, fps)?;
    let mut s = format!("fps {fps}\n");
    for f in frames {
        if f.agents.is_empty() {
            let _ = writeln!(s, "frame {} {}", f.frame_index, f.time_s);
        }
        for a in &f.agents {
            let _ = write!(
                s,
                "frame {} {} agent {} {}",
                f.frame_index, f.time_s, a.character_id, a.visibility
            );
            for k in &a.keypoints {
                let _ = write!(s, " kp {} {} {} {}", k.name, k.world[0], k.world[1], k.world[2]);
                match k.image {
                    Some(p) => {
                        let _ = write!(s, " {} {} {}", p.u, p.v, p.depth);
                    }
                    None => s.push_str(" - - -"),
                }
                let _ = write!(s, " {}", k.visible as u8);
            }
            s.push('\n');
        }
    }
    Ok(s)
}

/// Writes annotations ordered by frame index to `path`.
pub fn write_annotations<'a>(
    frames: impl IntoIterator<Item = &'a FrameAnnotation>,
    fps: f64,
    path: &Path,
) -> Result<()> {
    let frames: Vec<FrameAnnotation> = frames.into_iter().cloned().collect();
    let text = annotations_to_string(&frames, fps)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn parse_annotations(text: &str) -> Result<(f64, Vec<FrameAnnotation>)> {
    let mut lines = text.lines().enumerate();
    let fps = match lines.next() {
        Some((_, l)) => l
            .strip_prefix("fps ")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| *v > 0.0)
            .ok_or_else(|| Error::parse(1, "expected `fps <rate>` header"))?,
        None => return Err(Error::parse(1, "missing `fps` header")),
    };
    let mut frames: Vec<FrameAnnotation> = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: &str| Error::parse(ln, m.to_string());
        let num = |k: usize| -> Result<f64> {
            t.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::parse(ln, format!("field {k}: expected number")))
        };
        if t.first() != Some(&"frame") || t.len() < 3 {
            return Err(bad("expected `frame <idx> <t>`"));
        }
        let idx: u64 = t[1].parse().map_err(|_| bad("bad frame index"))?;
        let time = num(2)?;
        let same = frames.last().is_some_and(|f| f.frame_index == idx);
        if !same {
            frames.push(FrameAnnotation {
                frame_index: idx,
                time_s: time,
                agents: Vec::new(),
            });
        }
        if t.len() == 3 {
            continue;
        }
        let per_kp = 9;
        if t[3] != "agent" || t.len() != 6 + per_kp * EXPORTED_KEYPOINTS.len() {
            return Err(bad("expected `agent <id> <vis>` followed by 7 `kp` groups"));
        }
        let character_id: u32 = t[4].parse().map_err(|_| bad("bad agent id"))?;
        let vis = num(5)?;
        let mut keypoints = Vec::with_capacity(7);
        for g in 0..EXPORTED_KEYPOINTS.len() {
            let o = 6 + g * per_kp;
            if t[o] != "kp" {
                return Err(bad("expected `kp`"));
            }
            let image = if t[o + 5] == "-" {
                None
            } else {
                Some(ImagePoint {
                    u: num(o + 5)?,
                    v: num(o + 6)?,
                    depth: num(o + 7)?,
                })
            };
            let visible = match t[o + 8] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("visible flag must be 0 or 1")),
            };
            keypoints.push(KeypointRecord {
                name: t[o + 1].to_string(),
                world: [num(o + 2)?, num(o + 3)?, num(o + 4)?],
                image,
                visible,
            });
        }
        let frame = frames.last_mut().expect("frame pushed above");
        frame.agents.push(AgentAnnotation {
            character_id,
            visibility: vis,
            keypoints,
        });
    }
    check_order(&frames, fps)?;
    Ok((fps, frames))
}

pub fn read_annotations(path: &Path) -> Result<(f64, Vec<FrameAnnotation>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text)
}
