//! Timeline sampling, skeleton keypoints, crop boxes and annotation files.

mod annotation;
mod crop;
mod skeleton;

pub use annotation::{
    annotate_frame, annotations_to_string, parse_annotations, read_annotations, write_annotations, AgentAnnotation,
    FrameAnnotation, KeypointRecord,
};
pub use crop::{crop_box, extract_crop, CropBox, DetectionPolicy, PixelBox, RectF};
pub use skeleton::{
    keypoints_of, AgentPose, PosedBody, Skeleton, EXPORTED_KEYPOINTS, JOINT_COUNT, JOINT_NAMES,
};

use crate::error::{Error, Result};

pub const VIDEO_FPS: f64 = 24.0;
pub const DEFAULT_SAMPLE_INTERVAL_S: f64 = 0.5;

/// Frame indices `round(k * interval_s * fps)` for every `k` with
/// `k * interval_s <= duration_s`, deduplicated.
pub fn sample_frames(duration_s: f64, fps: f64, interval_s: f64) -> Result<Vec<u64>> {
    if !(fps > 0.0 && interval_s > 0.0 && duration_s >= 0.0) {
        return Err(Error::Validation(format!(
            "sampling needs fps > 0, interval > 0, duration >= 0 (got {fps}, {interval_s}, {duration_s})"
        )));
    }
    let mut out: Vec<u64> = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * interval_s;
        if t > duration_s + 1e-9 {
            break;
        }
        let idx = (t * fps).round() as u64;
        if out.last() != Some(&idx) {
            out.push(idx);
        }
        k += 1;
    }
    Ok(out)
}

/// Frame index of time `t` on a `fps` timeline.
pub fn frame_index(t: f64, fps: f64) -> u64 {
    (t * fps).round() as u64
}
