use crate::error::{Error, Result};

pub const MAX_INTENSITY: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightKey {
    pub t: f64,
    pub intensity: f64,
    pub direction: [f64; 3],
    pub color: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightState {
    pub intensity: f64,
    /// Unit vector the light travels along.
    pub direction: [f64; 3],
    /// RGB tint, components in `[0, 1]`.
    pub color: [f64; 3],
}

impl Default for LightState {
    fn default() -> Self {
        LightState {
            intensity: 1.0,
            direction: [0.0, -1.0, 0.0],
            color: [1.0, 1.0, 1.0],
        }
    }
}

/// Piecewise-linear keyframed lighting, held constant outside the key range.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LightSchedule {
    keys: Vec<LightKey>,
}

fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 1e-12 && n.is_finite()).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

fn lerp3(a: [f64; 3], b: [f64; 3], w: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * w,
        a[1] + (b[1] - a[1]) * w,
        a[2] + (b[2] - a[2]) * w,
    ]
}

impl LightSchedule {
    pub fn new(mut keys: Vec<LightKey>) -> Result<Self> {
        for k in &mut keys {
            if !(0.0..=MAX_INTENSITY).contains(&k.intensity) {
                return Err(Error::Validation(format!(
                    "light intensity {} outside [0, {MAX_INTENSITY}]",
                    k.intensity
                )));
            }
            if !k.t.is_finite() || k.t < 0.0 {
                return Err(Error::Validation(format!("light key time {} invalid", k.t)));
            }
            if k.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::Validation("light color outside [0,1]".into()));
            }
            k.direction = normalize(k.direction)
                .ok_or_else(|| Error::Validation("light direction must be non-zero".into()))?;
        }
        if keys.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Validation("light key times must increase".into()));
        }
        Ok(LightSchedule { keys })
    }

    pub fn constant(state: LightState) -> Self {
        LightSchedule {
            keys: vec![LightKey {
                t: 0.0,
                intensity: state.intensity.clamp(0.0, MAX_INTENSITY),
                direction: normalize(state.direction).unwrap_or([0.0, -1.0, 0.0]),
                color: state.color,
            }],
        }
    }

    pub fn keys(&self) -> &[LightKey] {
        &self.keys
    }

    pub fn at(&self, t: f64) -> LightState {
        let state = |k: &LightKey| LightState {
            intensity: k.intensity,
            direction: k.direction,
            color: k.color,
        };
        let (first, last) = match (self.keys.first(), self.keys.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return LightState::default(),
        };
        if t <= first.t {
            return state(first);
        }
        if t >= last.t {
            return state(last);
        }
        let i = self.keys.partition_point(|k| k.t <= t);
        let (a, b) = (&self.keys[i - 1], &self.keys[i]);
        let w = (t - a.t) / (b.t - a.t);
        LightState {
            intensity: (a.intensity + (b.intensity - a.intensity) * w).clamp(0.0, MAX_INTENSITY),
            direction: normalize(lerp3(a.direction, b.direction, w)).unwrap_or(a.direction),
            color: lerp3(a.color, b.color, w),
        }
    }
}
