use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::Lights;
use crate::error::{Error, Result};
use crate::scenario::Conditions;

/// Parametric stand-in for an object detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorProfile {
    pub name: String,
    pub max_detect_range: f64,
    /// Confidence falls to zero at `confidence_slope · r_eff`.
    pub confidence_slope: f64,
    /// Miss probability per frame in ideal light and visibility.
    pub miss_rate_base: f64,
    /// Smallest bounding box the detector reports, as a fraction of image
    /// height.
    pub min_bbox_frac: f64,
    #[serde(default)]
    pub latency_ticks: usize,
    /// How much poor light and visibility raise the miss rate: 0 ignores
    /// image quality, 1 scales the hit rate by it fully.
    #[serde(default = "full_sensitivity")]
    pub degradation_sensitivity: f64,
}

fn full_sensitivity() -> f64 {
    1.0
}

impl DetectorProfile {
    pub fn validate(&self) -> Result<()> {
        let name = |f: &str| format!("profiles.{}.{f}", self.name);
        if !(self.max_detect_range > 0.0) {
            return Err(Error::invalid(name("max_detect_range"), "must be > 0"));
        }
        if !(self.confidence_slope > 0.0) {
            return Err(Error::invalid(name("confidence_slope"), "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.miss_rate_base) {
            return Err(Error::invalid(name("miss_rate_base"), "must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.min_bbox_frac) {
            return Err(Error::invalid(name("min_bbox_frac"), "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.degradation_sensitivity) {
            return Err(Error::invalid(name("degradation_sensitivity"), "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// The four shipped profiles, most to least reliable: det-A, det-C, det-D,
/// det-B.
pub fn default_profiles() -> Vec<DetectorProfile> {
    let p = |name: &str, range: f64, slope: f64, miss: f64, bbox: f64, latency: usize, sens: f64| DetectorProfile {
        name: name.into(),
        max_detect_range: range,
        confidence_slope: slope,
        miss_rate_base: miss,
        min_bbox_frac: bbox,
        latency_ticks: latency,
        degradation_sensitivity: sens,
    };
    vec![
        p("det-A", 70.0, 1.0, 0.02, 0.03, 2, 0.6),
        p("det-B", 38.0, 1.0, 0.35, 0.06, 5, 1.0),
        p("det-C", 62.0, 1.0, 0.08, 0.03, 3, 0.8),
        p("det-D", 50.0, 1.0, 0.2, 0.04, 4, 0.9),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_tag: String,
    pub confidence: f64,
    pub bbox_height_frac: f64,
    pub range: f64,
}

/// Ground truth for one obstacle as seen from the camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub class_tag: String,
    /// Distance from the camera to the obstacle surface, m.
    pub range: f64,
    pub height: f64,
    /// Whether the obstacle center projects inside the image.
    pub in_view: bool,
}

/// Range multiplier of the vehicle lights.
pub fn light_boost(lights: Lights, ambient_light: f64, fog_present: bool) -> f64 {
    match lights {
        Lights::HighBeam => 1.3,
        Lights::LowBeam => 1.1,
        Lights::Fog if fog_present => 1.5,
        Lights::Fog => 0.9,
        Lights::Off if ambient_light < 0.5 => 0.7,
        Lights::Off => 1.0,
    }
}

/// Light the headlamps add to the scene, in ambient-light units.
fn headlamp_fill(lights: Lights, fog_present: bool) -> f64 {
    match lights {
        Lights::Off => 0.0,
        Lights::LowBeam => 0.1,
        Lights::HighBeam => 0.2,
        Lights::Fog if fog_present => 0.15,
        Lights::Fog => 0.05,
    }
}

/// Visual range at which image contrast stops limiting detection, m.
const CLEAR_VISUAL_RANGE: f64 = 300.0;

/// Image quality in `[0, 1]` from illumination and visual range.
pub fn detection_quality(conditions: &Conditions, lights: Lights) -> f64 {
    let fog = conditions.fog_present;
    let illumination = (conditions.ambient_light + headlamp_fill(lights, fog)).min(1.0);
    let visual_range = conditions.visibility * light_boost(lights, conditions.ambient_light, fog);
    let contrast = (visual_range / CLEAR_VISUAL_RANGE).min(1.0);
    (illumination * contrast).clamp(0.0, 1.0)
}

/// Per-frame miss probability at image quality `quality`.
pub fn adjusted_miss_rate(profile: &DetectorProfile, quality: f64) -> f64 {
    let hit_scale = 1.0 - profile.degradation_sensitivity * (1.0 - quality);
    1.0 - (1.0 - profile.miss_rate_base) * hit_scale
}

/// Emits at most one detection per visible target. `draw` is the tick's
/// uniform sample; the target is missed when it falls below the adjusted
/// miss rate.
pub fn synth_detect(
    targets: &[TargetTruth],
    conditions: &Conditions,
    lights: Lights,
    profile: &DetectorProfile,
    k_proj: f64,
    draw: f64,
) -> Vec<Detection> {
    let boost = light_boost(lights, conditions.ambient_light, conditions.fog_present);
    let r_eff = profile.max_detect_range.min(conditions.visibility * boost);
    let quality = detection_quality(conditions, lights);
    let miss = adjusted_miss_rate(profile, quality);
    if draw < miss {
        return Vec::new();
    }
    targets
        .iter()
        .filter(|t| t.in_view && t.range > 0.0 && t.range <= r_eff)
        .filter_map(|t| {
            let bbox = (t.height * k_proj / t.range).clamp(0.0, 1.0);
            (bbox >= profile.min_bbox_frac && bbox > 0.0).then(|| Detection {
                class_tag: t.class_tag.clone(),
                confidence: (1.0 - t.range / (profile.confidence_slope * r_eff)).clamp(0.0, 1.0),
                bbox_height_frac: bbox,
                range: t.range,
            })
        })
        .collect()
}

/// Per-tick uniform draws with temporal correlation.
///
/// Detector failures persist over consecutive frames (the same glare, the
/// same fog bank), so draws come from a unit Gaussian AR(1) process with
/// correlation time `tau`, mapped through the normal CDF. Each draw is
/// marginally uniform on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct MissProcess {
    rng: ChaCha8Rng,
    state: f64,
    decay: f64,
}

impl MissProcess {
    /// Default correlation time, s.
    pub const DEFAULT_TAU: f64 = 0.5;

    pub fn new(seed: u64, dt: f64, tau: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state: f64 = StandardNormal.sample(&mut rng);
        let decay = if tau > 0.0 { (-dt / tau).exp() } else { 0.0 };
        MissProcess { rng, state, decay }
    }

    pub fn next_draw(&mut self) -> f64 {
        let n: f64 = StandardNormal.sample(&mut self.rng);
        self.state = self.decay * self.state + (1.0 - self.decay * self.decay).sqrt() * n;
        0.5 * (1.0 + libm::erf(self.state / std::f64::consts::SQRT_2))
    }
}

/// Holds detections back by a fixed number of ticks.
#[derive(Debug, Clone, Default)]
pub struct LatencyBuffer {
    delay: usize,
    queue: VecDeque<Vec<Detection>>,
}

impl LatencyBuffer {
    pub fn new(delay: usize) -> Self {
        LatencyBuffer { delay, queue: VecDeque::with_capacity(delay + 1) }
    }

    /// Pushes this tick's detections and returns those from `delay` ticks ago.
    pub fn push(&mut self, detections: Vec<Detection>) -> Vec<Detection> {
        self.queue.push_back(detections);
        if self.queue.len() > self.delay {
            self.queue.pop_front().unwrap_or_default()
        } else {
            Vec::new()
        }
    }
}
