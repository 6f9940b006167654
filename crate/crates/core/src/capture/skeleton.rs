//! 31-joint body skeleton, gait posing and the exported keypoints.
//!
//! Joint coordinates are `(lateral, up, forward)` as fractions of body
//! height, lateral positive towards the body's right side. The feet rest on
//! `y = 0` and `head_top` is at `y = 1` in the neutral pose.

use crate::optics::{Capsule, Vec3};
use crate::world::{Agent, MoveMode};

pub const JOINT_COUNT: usize = 31;

const J: [(&str, [f64; 3]); JOINT_COUNT] = [
    ("root", [0.0, 0.53, 0.0]),
    ("pelvis", [0.0, 0.52, 0.0]),
    ("spine_01", [0.0, 0.58, 0.0]),
    ("spine_02", [0.0, 0.66, 0.0]),
    ("spine_03", [0.0, 0.74, 0.0]),
    ("neck", [0.0, 0.85, 0.0]),
    ("head", [0.0, 0.925, 0.01]),
    ("head_top", [0.0, 1.0, 0.0]),
    ("eye_l", [-0.018, 0.935, 0.055]),
    ("eye_r", [0.018, 0.935, 0.055]),
    ("jaw", [0.0, 0.89, 0.04]),
    ("clavicle_l", [-0.05, 0.82, 0.0]),
    ("shoulder_l", [-0.13, 0.815, 0.0]),
    ("elbow_l", [-0.15, 0.63, 0.0]),
    ("wrist_l", [-0.155, 0.48, 0.0]),
    ("hand_l", [-0.155, 0.43, 0.01]),
    ("clavicle_r", [0.05, 0.82, 0.0]),
    ("shoulder_r", [0.13, 0.815, 0.0]),
    ("elbow_r", [0.15, 0.63, 0.0]),
    ("wrist_r", [0.155, 0.48, 0.0]),
    ("hand_r", [0.155, 0.43, 0.01]),
    ("hip_l", [-0.055, 0.52, 0.0]),
    ("knee_l", [-0.06, 0.285, 0.01]),
    ("ankle_l", [-0.06, 0.04, 0.0]),
    ("foot_l", [-0.06, 0.0, 0.03]),
    ("toe_l", [-0.06, 0.012, 0.085]),
    ("hip_r", [0.055, 0.52, 0.0]),
    ("knee_r", [0.06, 0.285, 0.01]),
    ("ankle_r", [0.06, 0.04, 0.0]),
    ("foot_r", [0.06, 0.0, 0.03]),
    ("toe_r", [0.06, 0.012, 0.085]),
];

pub const JOINT_NAMES: [&str; JOINT_COUNT] = {
    let mut out = [""; JOINT_COUNT];
    let mut i = 0;
    while i < JOINT_COUNT {
        out[i] = J[i].0;
        i += 1;
    }
    out
};

/// Keypoints kept in annotation files, in file order.
pub const EXPORTED_KEYPOINTS: [&str; 7] = [
    "head_top",
    "shoulder_l",
    "shoulder_r",
    "hand_l",
    "hand_r",
    "foot_l",
    "foot_r",
];

pub(crate) fn joint(name: &str) -> usize {
    JOINT_NAMES
        .iter()
        .position(|n| *n == name)
        .unwrap_or_else(|| panic!("unknown joint {name}"))
}

/// Pose parameters of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPose {
    pub position: (f64, f64),
    pub heading: f64,
    pub phase: f64,
    pub mode: MoveMode,
}

impl AgentPose {
    /// Standing still at `position`, facing `heading`.
    pub fn neutral(position: (f64, f64), heading: f64) -> Self {
        AgentPose {
            position,
            heading,
            phase: 0.0,
            mode: MoveMode::Walk,
        }
    }

    pub fn of(agent: &Agent) -> Self {
        AgentPose {
            position: agent.position,
            heading: agent.heading,
            phase: agent.phase,
            mode: agent.mode,
        }
    }

    fn swing(&self) -> f64 {
        let amp = if self.mode.is_running() { 0.6 } else { 0.35 };
        amp * (std::f64::consts::TAU * self.phase).sin()
    }
}

/// World-space joints of a posed body.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub joints: Vec<Vec3>,
}

impl Skeleton {
    pub fn posed(height_m: f64, pose: &AgentPose) -> Self {
        let swing = pose.swing();
        let mut local: Vec<[f64; 3]> = J.iter().map(|(_, p)| *p).collect();
        // legs swing about the hips, arms counter-swing about the shoulders
        let limbs: [(&str, &[&str], f64); 4] = [
            ("hip_l", &["knee_l", "ankle_l", "foot_l", "toe_l"], swing),
            ("hip_r", &["knee_r", "ankle_r", "foot_r", "toe_r"], -swing),
            ("shoulder_l", &["elbow_l", "wrist_l", "hand_l"], -0.8 * swing),
            ("shoulder_r", &["elbow_r", "wrist_r", "hand_r"], 0.8 * swing),
        ];
        for (pivot, chain, angle) in limbs {
            let p = local[joint(pivot)];
            let (s, c) = angle.sin_cos();
            for name in chain {
                let q = &mut local[joint(name)];
                let (dy, dz) = (q[1] - p[1], q[2] - p[2]);
                q[1] = p[1] + dy * c + dz * s;
                q[2] = p[2] + dz * c - dy * s;
            }
        }
        let (sh, ch) = pose.heading.sin_cos();
        let forward = Vec3::new(ch, 0.0, sh);
        let right = Vec3::new(-sh, 0.0, ch);
        let origin = Vec3::new(pose.position.0, 0.0, pose.position.1);
        let joints = local
            .iter()
            .map(|q| origin + right * (q[0] * height_m) + Vec3::y() * (q[1] * height_m) + forward * (q[2] * height_m))
            .collect();
        Skeleton { joints }
    }

    pub fn joint(&self, name: &str) -> Vec3 {
        self.joints[joint(name)]
    }

    pub fn exported(&self) -> [Vec3; 7] {
        EXPORTED_KEYPOINTS.map(|n| self.joint(n))
    }
}

/// The seven exported keypoints in world space.
pub fn keypoints_of(height_m: f64, pose: &AgentPose) -> [Vec3; 7] {
    Skeleton::posed(height_m, pose).exported()
}

/// Everything needed to annotate and draw one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedBody {
    pub character_id: u32,
    pub height_m: f64,
    pub weight_norm: f64,
    pub pose: AgentPose,
}

impl PosedBody {
    pub fn skeleton(&self) -> Skeleton {
        Skeleton::posed(self.height_m, &self.pose)
    }

    pub fn keypoints(&self) -> [Vec3; 7] {
        keypoints_of(self.height_m, &self.pose)
    }

    pub fn capsule(&self) -> Capsule {
        Capsule::standing(self.pose.position, self.height_m, self.weight_norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_one_unique_joints() {
        let mut names = JOINT_NAMES.to_vec();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 31);
        for n in EXPORTED_KEYPOINTS {
            assert!(JOINT_NAMES.contains(&n));
        }
    }

    #[test]
    fn neutral_extremes() {
        let kp = keypoints_of(1.7, &AgentPose::neutral((3.0, 4.0), 0.7));
        let foot = kp[5].y.min(kp[6].y);
        assert!((kp[0].y - foot - 1.70).abs() < 1e-12);
        let sk = Skeleton::posed(1.7, &AgentPose::neutral((0.0, 0.0), 0.0));
        let top = sk.joints.iter().map(|p| p.y).fold(f64::MIN, f64::max);
        let bottom = sk.joints.iter().map(|p| p.y).fold(f64::MAX, f64::min);
        assert_eq!(top, sk.joint("head_top").y);
        assert_eq!(bottom, sk.joint("foot_l").y.min(sk.joint("foot_r").y));
    }

    #[test]
    fn heading_half_turn_mirrors() {
        let c = (2.0, -1.0);
        let pose = AgentPose { position: c, heading: 0.3, phase: 0.2, mode: MoveMode::Run };
        let a = keypoints_of(1.6, &pose);
        let b = keypoints_of(1.6, &AgentPose { heading: 0.3 + std::f64::consts::PI, ..pose });
        for (p, q) in a.iter().zip(&b) {
            assert!((p.x - c.0 + (q.x - c.0)).abs() < 1e-12);
            assert!((p.z - c.1 + (q.z - c.1)).abs() < 1e-12);
            assert!((p.y - q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_equivariance() {
        let pose = AgentPose { position: (1.0, 1.0), heading: 1.1, phase: 0.4, mode: MoveMode::Walk };
        let a = keypoints_of(1.75, &pose);
        let b = keypoints_of(1.75, &AgentPose { position: (2.0, 1.0), ..pose });
        for (p, q) in a.iter().zip(&b) {
            assert!(((q - p) - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn gait_moves_limbs_but_keeps_lengths() {
        let still = Skeleton::posed(1.7, &AgentPose::neutral((0.0, 0.0), 0.0));
        let moving = Skeleton::posed(1.7, &AgentPose { phase: 0.25, ..AgentPose::neutral((0.0, 0.0), 0.0) });
        assert!((still.joint("foot_l") - moving.joint("foot_l")).norm() > 0.1);
        let leg = |s: &Skeleton| (s.joint("foot_l") - s.joint("hip_l")).norm();
        assert!((leg(&still) - leg(&moving)).abs() < 1e-12);
    }
}
