//! Pinhole cameras, frustum tests and capsule occlusion.
//!
//! Camera config files hold one rig per line:
//!
//! ```text
//! cam <id> <x> <y> <z> <lx> <ly> <lz> <vfov_deg> <w> <h> <near> <far>
//! ```
//!
//! World axes: `y` up, ground plane `y = 0`. Cameras never roll.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const UP: Vec3 = Vector3::new(0.0, 1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub id: u32,
    pub position: Vec3,
    pub look_at: Vec3,
    pub vertical_fov: f64,
    pub resolution: (u32, u32),
    pub near: f64,
    pub far: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Front(ImagePoint),
    Behind,
}

impl Projection {
    pub fn front(self) -> Option<ImagePoint> {
        match self {
            Projection::Front(p) => Some(p),
            Projection::Behind => None,
        }
    }
}

/// Orthonormal camera basis: right, up, forward.
#[derive(Debug, Clone, Copy)]
struct Basis {
    right: Vec3,
    up: Vec3,
    forward: Vec3,
}

impl CameraRig {
    pub fn new(
        id: u32,
        position: Vec3,
        look_at: Vec3,
        vertical_fov: f64,
        resolution: (u32, u32),
        near: f64,
        far: f64,
    ) -> Result<Self> {
        let rig = CameraRig {
            id,
            position,
            look_at,
            vertical_fov,
            resolution,
            near,
            far,
        };
        rig.validate()?;
        Ok(rig)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(Error::Validation(format!(
                "camera {}: vertical fov {} outside (0, 180)",
                self.id, self.vertical_fov
            )));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(Error::Validation(format!(
                "camera {}: need 0 < near < far, got {} / {}",
                self.id, self.near, self.far
            )));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::Validation(format!("camera {}: empty resolution", self.id)));
        }
        let f = self.look_at - self.position;
        if f.norm() < 1e-9 || f.normalize().cross(&UP).norm() < 1e-6 {
            return Err(Error::Validation(format!(
                "camera {}: view direction must be non-zero and not vertical",
                self.id
            )));
        }
        Ok(())
    }

    fn basis(&self) -> Basis {
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(&UP).normalize();
        let up = right.cross(&forward);
        Basis { right, up, forward }
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        self.resolution.1 as f64 / 2.0 / (self.vertical_fov.to_radians() / 2.0).tan()
    }

    /// Same rig at a different output resolution (aspect may change).
    pub fn with_resolution(&self, resolution: (u32, u32)) -> Self {
        CameraRig {
            resolution,
            ..self.clone()
        }
    }

    /// Unit direction of the ray through pixel coordinates `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        let b = self.basis();
        let f = self.focal();
        let x = (u - self.resolution.0 as f64 / 2.0) / f;
        let y = -(v - self.resolution.1 as f64 / 2.0) / f;
        (b.forward + b.right * x + b.up * y).normalize()
    }

    /// Depth along the optical axis.
    pub fn depth_of(&self, p: &Vec3) -> f64 {
        (p - self.position).dot(&self.basis().forward)
    }
}

pub fn project(rig: &CameraRig, p: &Vec3) -> Result<Projection> {
    let d = p - rig.position;
    if d.norm() < 1e-12 {
        return Err(Error::Degenerate(format!("point coincides with camera {}", rig.id)));
    }
    let b = rig.basis();
    let depth = d.dot(&b.forward);
    if depth <= 0.0 {
        return Ok(Projection::Behind);
    }
    let f = rig.focal();
    let (w, h) = (rig.resolution.0 as f64, rig.resolution.1 as f64);
    Ok(Projection::Front(ImagePoint {
        u: w / 2.0 + f * d.dot(&b.right) / depth,
        v: h / 2.0 - f * d.dot(&b.up) / depth,
        depth,
    }))
}

pub fn in_frustum(rig: &CameraRig, p: &Vec3) -> bool {
    match project(rig, p) {
        Ok(Projection::Front(ip)) => {
            ip.u >= 0.0
                && ip.u < rig.resolution.0 as f64
                && ip.v >= 0.0
                && ip.v < rig.resolution.1 as f64
                && ip.depth >= rig.near
                && ip.depth <= rig.far
        }
        _ => false,
    }
}

/// Body proxy used for occlusion: a vertical capsule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub base: Vec3,
    pub top: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn body_radius(weight_norm: f64) -> f64 {
        0.15 + 0.1 * weight_norm
    }

    /// Capsule standing at ground position `(x, z)`.
    pub fn standing(ground: (f64, f64), height_m: f64, weight_norm: f64) -> Self {
        let r = Self::body_radius(weight_norm);
        // the rounded ends stay within [0, height]
        let lo = r.min(height_m / 2.0);
        let hi = (height_m - r).max(lo);
        Capsule {
            base: Vec3::new(ground.0, lo, ground.1),
            top: Vec3::new(ground.0, hi, ground.1),
            radius: r,
        }
    }

    pub fn blocks(&self, from: &Vec3, to: &Vec3) -> bool {
        segment_distance(from, to, &self.base, &self.top) < self.radius
    }
}

/// Closest distance between segments `p1q1` and `p2q2`.
pub fn segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-15;
    let (s, t);
    if a <= eps && e <= eps {
        return r.norm();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > eps {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// Fraction of `keypoints` whose line of sight to the camera is clear of
/// every occluder.
pub fn visibility(rig: &CameraRig, keypoints: &[Vec3], occluders: &[Capsule]) -> f64 {
    if keypoints.is_empty() {
        return 0.0;
    }
    let clear = keypoints
        .iter()
        .filter(|kp| !occluders.iter().any(|c| c.blocks(&rig.position, kp)))
        .count();
    clear as f64 / keypoints.len() as f64
}

pub fn parse_cameras(text: &str) -> Result<Vec<CameraRig>> {
    let mut out: Vec<CameraRig> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] != "cam" || toks.len() != 13 {
            return Err(Error::parse(
                ln,
                "expected `cam id x y z lx ly lz vfov w h near far`",
            ));
        }
        let f = |k: usize| -> Result<f64> {
            toks[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(ln, format!("field {k}: bad number `{}`", toks[k])))
        };
        let u = |k: usize| -> Result<u32> {
            toks[k]
                .parse::<u32>()
                .map_err(|_| Error::parse(ln, format!("field {k}: bad integer `{}`", toks[k])))
        };
        let rig = CameraRig {
            id: u(1)?,
            position: Vec3::new(f(2)?, f(3)?, f(4)?),
            look_at: Vec3::new(f(5)?, f(6)?, f(7)?),
            vertical_fov: f(8)?,
            resolution: (u(9)?, u(10)?),
            near: f(11)?,
            far: f(12)?,
        };
        rig.validate().map_err(|e| Error::parse(ln, e.to_string()))?;
        if out.iter().any(|r| r.id == rig.id) {
            return Err(Error::DuplicateId(format!("camera {}", rig.id)));
        }
        out.push(rig);
    }
    Ok(out)
}

pub fn load_cameras(path: &Path) -> Result<Vec<CameraRig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cameras(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rig(fov: f64, w: u32, h: u32) -> CameraRig {
        CameraRig::new(
            1,
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 10.0),
            fov,
            (w, h),
            0.1,
            50.0,
        )
        .unwrap()
    }

    #[test]
    fn axis_point_hits_principal_point() {
        let r = rig(60.0, 640, 480);
        let p = project(&r, &Vec3::new(0.0, 1.0, 5.0)).unwrap().front().unwrap();
        assert!((p.u - 320.0).abs() < 1e-9 && (p.v - 240.0).abs() < 1e-9);
        assert!((p.depth - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ninety_degree_focal() {
        let r = rig(90.0, 1000, 1000);
        // looking down +z with up +y, right is -x
        let p = project(&r, &Vec3::new(-1.0, 1.0, 1.0)).unwrap().front().unwrap();
        assert!((p.u - 1000.0).abs() < 1e-9, "{}", p.u);
        assert!((p.v - 500.0).abs() < 1e-9);
    }

    #[test]
    fn behind_and_degenerate() {
        let r = rig(60.0, 640, 480);
        assert_eq!(project(&r, &Vec3::new(0.0, 1.0, -3.0)).unwrap(), Projection::Behind);
        assert!(matches!(project(&r, &Vec3::new(0.0, 1.0, 0.0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn frustum_cases() {
        let r = rig(60.0, 640, 480);
        assert!(in_frustum(&r, &Vec3::new(0.0, 1.0, (0.1 + 50.0) / 2.0)));
        assert!(!in_frustum(&r, &Vec3::new(0.0, 1.0, 51.0)));
        // u = -1: one pixel left of the image edge
        let z = 5.0;
        let x = (320.0 + 1.0) * z / r.focal();
        let p = Vec3::new(x, 1.0, z);
        let ip = project(&r, &p).unwrap().front().unwrap();
        assert!((ip.u + 1.0).abs() < 1e-9);
        assert!(!in_frustum(&r, &p));
    }

    #[test]
    fn invalid_rigs() {
        let base = rig(60.0, 640, 480);
        assert!(CameraRig { vertical_fov: 180.0, ..base.clone() }.validate().is_err());
        assert!(CameraRig { near: 60.0, ..base.clone() }.validate().is_err());
        assert!(CameraRig { look_at: Vec3::new(0.0, -5.0, 0.0), ..base }.validate().is_err());
    }

    fn keypoints_at(z: f64) -> Vec<Vec3> {
        (0..7).map(|i| Vec3::new(0.0, 0.2 + 0.25 * i as f64, z)).collect()
    }

    #[test]
    fn visibility_cases() {
        let r = CameraRig::new(1, Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 10.0), 60.0, (640, 480), 0.1, 50.0).unwrap();
        let kps = keypoints_at(8.0);
        assert_eq!(visibility(&r, &kps, &[]), 1.0);
        // tall wide capsule halfway along every sight line
        let wall = Capsule {
            base: Vec3::new(0.0, -5.0, 4.0),
            top: Vec3::new(0.0, 7.0, 4.0),
            radius: 0.3,
        };
        assert_eq!(visibility(&r, &kps, &[wall]), 0.0);
        let behind = Capsule::standing((0.0, 9.0), 1.8, 0.5);
        assert_eq!(visibility(&r, &kps, &[behind]), 1.0);
    }

    #[test]
    fn segment_distance_cases() {
        let o = Vec3::zeros();
        let d = segment_distance(&o, &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.5, 1.0, -1.0), &Vec3::new(0.5, 1.0, 1.0));
        assert!((d - 1.0).abs() < 1e-12);
        let d = segment_distance(&o, &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(2.0, 0.0, 0.0), &Vec3::new(3.0, 0.0, 0.0));
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_camera_lines() {
        let cams = parse_cameras("cam 3 0 3 0 5 0 5 55 480 270 0.1 60\n").unwrap();
        assert_eq!(cams[0].id, 3);
        assert!(parse_cameras("cam 3 0 3 0 5 0 5 55 480 270 0.1\n").is_err());
        let dup = "cam 1 0 3 0 5 0 5 55 480 270 0.1 60\ncam 1 0 3 0 5 0 5 55 480 270 0.1 60\n";
        assert!(matches!(parse_cameras(dup), Err(Error::DuplicateId(_))));
    }

    proptest! {
        #[test]
        fn doubling_resolution_doubles_offsets(
            x in -3.0f64..3.0, y in 0.0f64..3.0, z in 1.0f64..30.0,
        ) {
            let a = rig(50.0, 320, 240);
            let b = a.with_resolution((640, 480));
            let p = Vec3::new(x, y, z);
            let pa = project(&a, &p).unwrap().front().unwrap();
            let pb = project(&b, &p).unwrap().front().unwrap();
            prop_assert!(((pb.u - 320.0) - 2.0 * (pa.u - 160.0)).abs() < 1e-9);
            prop_assert!(((pb.v - 240.0) - 2.0 * (pa.v - 120.0)).abs() < 1e-9);
        }

        #[test]
        fn in_frustum_implies_pixel(x in -20.0f64..20.0, y in -5.0f64..8.0, z in -5.0f64..60.0) {
            let r = rig(60.0, 640, 480);
            let p = Vec3::new(x, y, z);
            if in_frustum(&r, &p) {
                let ip = project(&r, &p).unwrap().front().unwrap();
                prop_assert!(ip.u >= 0.0 && ip.u < 640.0 && ip.v >= 0.0 && ip.v < 480.0);
            }
        }

        #[test]
        fn visibility_monotone_in_radius(
            ox in -1.0f64..1.0, oz in 2.0f64..7.0, r1 in 0.05f64..0.6, dr in 0.0f64..0.6,
        ) {
            let r = rig(60.0, 640, 480);
            let kps = keypoints_at(8.0);
            let mut c = Capsule::standing((ox, oz), 1.7, 0.0);
            c.radius = r1;
            let small = visibility(&r, &kps, &[c]);
            c.radius = r1 + dr;
            let big = visibility(&r, &kps, &[c]);
            prop_assert!(big <= small);
        }
    }
}
