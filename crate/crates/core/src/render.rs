//! Software rasterizer for simulation frames.
//!
//! The ground plane is ray cast per pixel; agents are built from screen-space
//! capsules (limbs, head, accessories) and a camera-facing torso quad, all
//! written through a shared depth buffer. Shading is flat:
//! `texture × intensity / 1.5 × light colour`.

use std::path::Path;
use std::sync::Arc;

use image::{Rgb, RgbImage};

use crate::capture::{PosedBody, Skeleton};
use crate::error::{Error, Result};
use crate::optics::{project, CameraRig, Vec3};
use crate::persona::Character;
use crate::texgen::{TextureStore, UvTextureMap};
use crate::wardrobe::Slot;
use crate::world::{LightState, Scene, MAX_INTENSITY};

pub const DEFAULT_RESOLUTION: (u32, u32) = (480, 270);

const SKIN_LIGHT: [f64; 3] = [241.0, 212.0, 190.0];
const SKIN_DARK: [f64; 3] = [72.0, 46.0, 32.0];

#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    pub width: u32,
    pub height: u32,
    pub pixels: RgbImage,
    /// Depth along the optical axis in meters; `+inf` for sky.
    pub depth: Vec<f32>,
}

impl FrameImage {
    pub fn depth_at(&self, x: u32, y: u32) -> f32 {
        self.depth[(y * self.width + x) as usize]
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        self.pixels.save(path)?;
        Ok(())
    }
}

/// Evenly spaced tones from light to dark.
pub fn skin_rgb(index: usize, tones: usize) -> [u8; 3] {
    let w = if tones > 1 {
        index.min(tones - 1) as f64 / (tones - 1) as f64
    } else {
        0.0
    };
    std::array::from_fn(|k| (SKIN_LIGHT[k] + (SKIN_DARK[k] - SKIN_LIGHT[k]) * w).round() as u8)
}

#[derive(Debug, Clone)]
pub enum Paint {
    Flat([u8; 3]),
    Texture(Arc<UvTextureMap>),
}

impl Paint {
    fn sample(&self, u: f64, v: f64) -> [u8; 3] {
        match self {
            Paint::Flat(c) => *c,
            Paint::Texture(m) => m.sample(u, v),
        }
    }
}

/// Resolved look of one character.
#[derive(Debug, Clone)]
pub struct Appearance {
    pub character_id: u32,
    pub skin: [u8; 3],
    pub slots: Vec<(Slot, Paint)>,
}

impl Appearance {
    pub fn of(character: &Character, skin_tones: usize, store: &TextureStore) -> Result<Self> {
        let mut slots = Vec::new();
        for (slot, model) in &character.outfit.assignments {
            slots.push((*slot, Paint::Texture(store.resolve(model.uv.clone())?)));
        }
        Ok(Appearance {
            character_id: character.id,
            skin: skin_rgb(character.skin, skin_tones),
            slots,
        })
    }

    /// Untextured stand-in, one flat colour for all clothing.
    pub fn flat(character_id: u32, skin: [u8; 3], cloth: [u8; 3]) -> Self {
        let slots = [Slot::Top, Slot::Bottom, Slot::Shoes, Slot::Hair]
            .into_iter()
            .map(|s| (s, Paint::Flat(cloth)))
            .collect();
        Appearance {
            character_id,
            skin,
            slots,
        }
    }

    pub fn paint(&self, slot: Slot) -> Option<&Paint> {
        self.slots.iter().find(|(s, _)| *s == slot).map(|(_, p)| p)
    }
}

/// Part of the UV map a primitive samples from: `(u0, v0, u1, v1)`.
type UvRect = (f64, f64, f64, f64);

const FULL: UvRect = (0.0, 0.0, 1.0, 1.0);
const UPPER: UvRect = (0.0, 0.0, 1.0, 0.5);
const LOWER: UvRect = (0.0, 0.5, 1.0, 1.0);

struct Primitive {
    a: Vec3,
    b: Vec3,
    radius: f64,
    capped: bool,
    paint: Paint,
    rect: UvRect,
}

fn body_primitives(body: &PosedBody, look: &Appearance) -> Vec<Primitive> {
    let sk: Skeleton = body.skeleton();
    let h = body.height_m;
    let w = body.weight_norm;
    let j = |n: &str| sk.joint(n);
    let skin = Paint::Flat(look.skin);
    let paint = |slot: Slot| look.paint(slot).cloned();
    let dress = paint(Slot::Dress);
    let top = dress.clone().or_else(|| paint(Slot::Top)).unwrap_or(skin.clone());
    let bottom = dress.clone().or_else(|| paint(Slot::Bottom)).unwrap_or(skin.clone());
    let (sh, ch) = body.pose.heading.sin_cos();
    let forward = Vec3::new(ch, 0.0, sh);
    let up = Vec3::y();
    let base = Vec3::new(body.pose.position.0, 0.0, body.pose.position.1);
    let limb = 0.045 * h * (0.9 + 0.4 * w);
    let mut out = Vec::new();
    let mut add = |a: Vec3, b: Vec3, radius: f64, capped: bool, paint: Paint, rect: UvRect| {
        out.push(Primitive { a, b, radius, capped, paint, rect })
    };

    for side in ["l", "r"] {
        let n = |p: &str| j(&format!("{p}_{side}"));
        add(n("hip"), n("knee"), limb * 1.15, true, bottom.clone(), LOWER);
        let shin = if dress.is_some() { skin.clone() } else { bottom.clone() };
        add(n("knee"), n("ankle"), limb, true, shin, LOWER);
        let shoe = paint(Slot::Shoes).unwrap_or(Paint::Flat([40, 40, 40]));
        add(n("ankle"), n("toe"), 0.03 * h, true, shoe, FULL);
        let sleeve = if dress.is_some() { skin.clone() } else { top.clone() };
        add(n("shoulder"), n("elbow"), limb * 0.8, true, sleeve, UPPER);
        add(n("elbow"), n("hand"), limb * 0.7, true, skin.clone(), FULL);
    }
    let torso_half = 0.12 * h * (0.85 + 0.5 * w);
    let torso_low = if dress.is_some() { base + up * (0.3 * h) } else { j("pelvis") - up * (0.02 * h) };
    add(torso_low, j("neck") - up * (0.02 * h), torso_half, false, top.clone(), UPPER);
    add(j("neck"), j("head"), 0.035 * h, true, skin.clone(), FULL);
    let head = j("head");
    add(head, head, 0.07 * h, true, skin.clone(), FULL);
    if let Some(p) = paint(Slot::Hair) {
        add(head + up * (0.035 * h), head + up * (0.045 * h), 0.062 * h, true, p, FULL);
    }
    if let Some(p) = paint(Slot::Beard) {
        add(j("jaw") + forward * (0.02 * h), j("jaw") + forward * (0.02 * h), 0.03 * h, true, p, FULL);
    }
    if let Some(p) = paint(Slot::Hat) {
        let top_of_head = j("head_top");
        add(top_of_head - up * (0.01 * h), top_of_head + up * (0.04 * h), 0.065 * h, true, p, FULL);
    }
    if let Some(p) = paint(Slot::Backpack) {
        let back = -forward * (0.1 * h);
        add(j("spine_02") + back, j("spine_03") + back, 0.09 * h, true, p, FULL);
    }
    if let Some(p) = paint(Slot::Necklace) {
        let c = j("neck") - up * (0.03 * h) + forward * (0.03 * h);
        add(c, c, 0.018 * h, true, p, FULL);
    }
    if let Some(p) = paint(Slot::Bow) {
        let c = j("head_top") - up * (0.02 * h) - forward * (0.05 * h);
        add(c, c, 0.025 * h, true, p, FULL);
    }
    out
}

struct Target<'a> {
    rig: &'a CameraRig,
    img: &'a mut RgbImage,
    depth: &'a mut [f32],
    shade: [f64; 3],
}

impl Target<'_> {
    fn put(&mut self, x: u32, y: u32, z: f64, rgb: [u8; 3]) {
        let i = (y * self.img.width() + x) as usize;
        if z < self.depth[i] as f64 {
            self.depth[i] = z as f32;
            self.img.put_pixel(x, y, Rgb(lit(rgb, self.shade)));
        }
    }
}

fn lit(rgb: [u8; 3], shade: [f64; 3]) -> [u8; 3] {
    std::array::from_fn(|k| (rgb[k] as f64 * shade[k]).round().clamp(0.0, 255.0) as u8)
}

fn shade_of(light: &LightState) -> [f64; 3] {
    let s = light.intensity / MAX_INTENSITY;
    light.color.map(|c| c * s)
}

/// Clips segment `ab` to the part with depth at least `near`.
fn clip_near(rig: &CameraRig, a: Vec3, b: Vec3) -> Option<(Vec3, Vec3)> {
    let (da, db) = (rig.depth_of(&a), rig.depth_of(&b));
    let n = rig.near;
    match (da >= n, db >= n) {
        (true, true) => Some((a, b)),
        (false, false) => None,
        (ina, _) => {
            let t = (n - da) / (db - da);
            let c = a + (b - a) * t;
            Some(if ina { (a, c) } else { (c, b) })
        }
    }
}

fn draw(t: &mut Target, p: &Primitive) {
    let rig = t.rig;
    let Some((a, b)) = clip_near(rig, p.a, p.b) else {
        return;
    };
    let (Some(pa), Some(pb)) = (
        project(rig, &a).ok().and_then(|x| x.front()),
        project(rig, &b).ok().and_then(|x| x.front()),
    ) else {
        return;
    };
    let f = rig.focal();
    let (ra, rb) = (f * p.radius / pa.depth, f * p.radius / pb.depth);
    let rmax = ra.max(rb);
    let (w, h) = (t.img.width() as f64, t.img.height() as f64);
    let x0 = (pa.u.min(pb.u) - rmax).floor().max(0.0);
    let x1 = (pa.u.max(pb.u) + rmax).ceil().min(w);
    let y0 = (pa.v.min(pb.v) - rmax).floor().max(0.0);
    let y1 = (pa.v.max(pb.v) + rmax).ceil().min(h);
    if x0 >= x1 || y0 >= y1 {
        return;
    }
    let (dx, dy) = (pb.u - pa.u, pb.v - pa.v);
    let len2 = dx * dx + dy * dy;
    let len = len2.sqrt();
    for y in y0 as u32..y1 as u32 {
        for x in x0 as u32..x1 as u32 {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let (ex, ey) = (cx - pa.u, cy - pa.v);
            let raw = if len2 > 1e-12 { (ex * dx + ey * dy) / len2 } else { 0.0 };
            if !p.capped && !(0.0..=1.0).contains(&raw) {
                continue;
            }
            let s = raw.clamp(0.0, 1.0);
            let r = ra + (rb - ra) * s;
            let (qx, qy) = (pa.u + dx * s - cx, pa.v + dy * s - cy);
            let d2 = qx * qx + qy * qy;
            if d2 > r * r {
                continue;
            }
            let lateral = if len > 1e-9 { (ex * dy - ey * dx) / len } else { -ex };
            let bulge = p.radius * (1.0 - d2 / (r * r)).max(0.0).sqrt();
            let z = pa.depth + (pb.depth - pa.depth) * s - bulge;
            let across = (0.5 + 0.5 * lateral / r).clamp(0.0, 1.0);
            let along = if len > 1e-9 { s } else { (0.5 + 0.5 * ey / r).clamp(0.0, 1.0) };
            let (u0, v0, u1, v1) = p.rect;
            let rgb = p.paint.sample(u0 + (u1 - u0) * across, v0 + (v1 - v0) * along);
            t.put(x, y, z, rgb);
        }
    }
}

/// Sky above the horizon; ground, walkable or blocked, below it.
fn background(scene: &Scene, rig: &CameraRig, light: &LightState, img: &mut RgbImage, depth: &mut [f32]) {
    let shade = shade_of(light);
    let ground = lit(scene.ground_rgb, shade);
    let blocked = lit(scene.blocked_rgb, shade);
    let origin = rig.position;
    let axis = (rig.look_at - rig.position).normalize();
    let width = img.width();
    for (x, y, px) in img.enumerate_pixels_mut() {
        let d = rig.ray_direction(x as f64 + 0.5, y as f64 + 0.5);
        let mut rgb = scene.sky_rgb;
        let mut z = f32::INFINITY;
        if d.y < -1e-9 && origin.y > 0.0 {
            let t = -origin.y / d.y;
            let hit = origin + d * t;
            let along = t * d.dot(&axis);
            if along <= rig.far {
                z = along as f32;
                let walk = scene
                    .walkable
                    .cell_at(hit.x, hit.z)
                    .is_some_and(|c| scene.walkable.is_walkable(c));
                rgb = if walk { ground } else { blocked };
            }
        }
        *px = Rgb(rgb);
        depth[(y * width + x) as usize] = z;
    }
}

/// Renders one frame. `looks` supplies the appearance of each body by
/// character id; bodies without an entry are drawn in neutral grey.
pub fn render_frame(
    scene: &Scene,
    bodies: &[PosedBody],
    looks: &dyn Fn(u32) -> Option<Arc<Appearance>>,
    rig: &CameraRig,
    light: &LightState,
) -> FrameImage {
    let (w, h) = rig.resolution;
    let mut pixels = RgbImage::new(w, h);
    let mut depth = vec![f32::INFINITY; (w * h) as usize];
    background(scene, rig, light, &mut pixels, &mut depth);
    let mut target = Target {
        rig,
        img: &mut pixels,
        depth: &mut depth,
        shade: shade_of(light),
    };
    for body in bodies {
        let look = looks(body.character_id)
            .unwrap_or_else(|| Arc::new(Appearance::flat(body.character_id, skin_rgb(0, 1), [128, 128, 128])));
        for p in body_primitives(body, &look) {
            draw(&mut target, &p);
        }
    }
    FrameImage {
        width: w,
        height: h,
        pixels,
        depth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::AgentPose;
    use crate::texgen::compose_uv_map;
    use crate::world::LightSchedule;
    use proptest::prelude::*;

    fn scene() -> Scene {
        let text = "scene 1 plaza\ngrid 10 10 1.0\n..........\n..........\n..........\n..........\n..........\n..........\n..........\n..........\n..........\n..........\ndest 1 1\ndest 8 8\n";
        Scene::parse(text).unwrap()
    }

    fn rig() -> CameraRig {
        CameraRig::new(1, Vec3::new(5.0, 1.6, -1.0), Vec3::new(5.0, 1.0, 5.0), 50.0, (160, 90), 0.1, 60.0)
            .unwrap()
    }

    fn body(id: u32, x: f64, z: f64) -> PosedBody {
        PosedBody {
            character_id: id,
            height_m: 1.7,
            weight_norm: 0.5,
            pose: AgentPose::neutral((x, z), -std::f64::consts::FRAC_PI_2),
        }
    }

    fn textured(id: u32, palette: usize) -> Arc<Appearance> {
        let map = Arc::new(compose_uv_map(palette, 3, (64, 64)).unwrap());
        let slots = [Slot::Top, Slot::Bottom, Slot::Shoes, Slot::Hair]
            .into_iter()
            .map(|s| (s, Paint::Texture(map.clone())))
            .collect();
        Arc::new(Appearance { character_id: id, skin: [200, 160, 140], slots })
    }

    fn none(_: u32) -> Option<Arc<Appearance>> {
        None
    }

    #[test]
    fn empty_scene_is_background() {
        let f = render_frame(&scene(), &[], &none, &rig(), &LightState::default());
        let s = scene();
        let g = lit(s.ground_rgb, shade_of(&LightState::default()));
        assert_eq!(f.pixels.get_pixel(80, 89).0, g);
        assert_eq!(f.pixels.get_pixel(80, 0).0, s.sky_rgb);
        assert!(f.depth_at(80, 0).is_infinite());
        assert!(f.pixels.pixels().all(|p| p.0 == g || p.0 == s.sky_rgb || p.0 == lit(s.blocked_rgb, shade_of(&LightState::default()))));
    }

    #[test]
    fn texture_changes_only_silhouette() {
        let s = scene();
        let b = [body(1, 5.0, 4.0)];
        let l = LightState::default();
        let a = render_frame(&s, &b, &|_| Some(textured(1, 40)), &rig(), &l);
        let c = render_frame(&s, &b, &|_| Some(textured(1, 400)), &rig(), &l);
        let empty = render_frame(&s, &[], &none, &rig(), &l);
        let mut differing = 0;
        for (x, y, p) in a.pixels.enumerate_pixels() {
            let inside = a.depth_at(x, y) < empty.depth_at(x, y);
            if p != c.pixels.get_pixel(x, y) {
                differing += 1;
                assert!(inside, "pixel ({x},{y}) changed outside the agent");
            }
            if !inside {
                assert_eq!(p, empty.pixels.get_pixel(x, y));
            }
        }
        assert!(differing > 20);
    }

    #[test]
    fn zero_light_blackens_agents() {
        let s = scene();
        let dark = LightState { intensity: 0.0, ..LightState::default() };
        let f = render_frame(&s, &[body(1, 5.0, 4.0)], &|_| Some(textured(1, 40)), &rig(), &dark);
        let empty = render_frame(&s, &[], &none, &rig(), &dark);
        let mut agent = 0;
        for (x, y, p) in f.pixels.enumerate_pixels() {
            if f.depth_at(x, y) < empty.depth_at(x, y) {
                agent += 1;
                assert_eq!(p.0, [0, 0, 0]);
            }
        }
        assert!(agent > 100);
    }

    #[test]
    fn light_schedule_scales_colour() {
        let sched = LightSchedule::constant(LightState { intensity: 1.5, ..LightState::default() });
        let f = render_frame(&scene(), &[], &none, &rig(), &sched.at(0.0));
        assert_eq!(f.pixels.get_pixel(80, 89).0, scene().ground_rgb);
    }

    #[test]
    fn deterministic() {
        let b = [body(1, 5.0, 4.0), body(2, 4.6, 6.0)];
        let look = |id: u32| Some(textured(id, 100 + id as usize));
        let x = render_frame(&scene(), &b, &look, &rig(), &LightState::default());
        let y = render_frame(&scene(), &b, &look, &rig(), &LightState::default());
        assert_eq!(x, y);
    }

    #[test]
    fn skin_ramp_ends() {
        assert_eq!(skin_rgb(0, 8), [241, 212, 190]);
        assert_eq!(skin_rgb(7, 8), [72, 46, 32]);
        assert_eq!(skin_rgb(0, 1), [241, 212, 190]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nearer_agent_wins_overlap(near_z in 2.5f64..4.5, gap in 0.8f64..3.0, dx in -0.2f64..0.2) {
            let s = scene();
            let red = Arc::new(Appearance::flat(1, [255, 0, 0], [255, 0, 0]));
            let blue = Arc::new(Appearance::flat(2, [0, 0, 255], [0, 0, 255]));
            let look = |id: u32| Some(if id == 1 { red.clone() } else { blue.clone() });
            let l = LightState { intensity: 1.5, ..LightState::default() };
            let near = body(1, 5.0, near_z);
            let far = body(2, 5.0 + dx, near_z + gap);
            // draw order must not matter
            let f1 = render_frame(&s, &[near.clone(), far.clone()], &look, &rig(), &l);
            let f2 = render_frame(&s, &[far.clone(), near.clone()], &look, &rig(), &l);
            let only_near = render_frame(&s, &[near], &look, &rig(), &l);
            for (x, y, p) in only_near.pixels.enumerate_pixels() {
                if p.0 == [255, 0, 0] {
                    prop_assert_eq!(f1.pixels.get_pixel(x, y).0, [255, 0, 0]);
                    prop_assert_eq!(f2.pixels.get_pixel(x, y).0, [255, 0, 0]);
                }
            }
            prop_assert_eq!(f1, f2);
        }
    }
}
