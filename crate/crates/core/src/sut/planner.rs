use serde::{Deserialize, Serialize};

use super::detector::Detection;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PlannerState {
    #[default]
    Cruise,
    Brake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AebPlannerConfig {
    pub trigger_classes: Vec<String>,
    pub min_confidence: f64,
    pub min_bbox_frac: f64,
    /// Keep braking once triggered.
    pub latch: bool,
}

impl Default for AebPlannerConfig {
    fn default() -> Self {
        AebPlannerConfig {
            trigger_classes: vec!["car".into(), "stalled_vehicle".into(), "pedestrian".into()],
            min_confidence: 0.5,
            min_bbox_frac: 0.02,
            latch: true,
        }
    }
}

impl AebPlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::invalid("planner.min_confidence", "must be in [0, 1]"));
        }
        if !(self.min_bbox_frac > 0.0 && self.min_bbox_frac <= 1.0) {
            return Err(Error::invalid("planner.min_bbox_frac", "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// One planning tick. Returns the trigger and moves the state machine.
pub fn aeb_plan(detections: &[Detection], cfg: &AebPlannerConfig, state: &mut PlannerState) -> bool {
    let hit = detections.iter().any(|d| {
        cfg.trigger_classes.iter().any(|c| *c == d.class_tag)
            && d.confidence >= cfg.min_confidence
            && d.bbox_height_frac >= cfg.min_bbox_frac
    });
    let trigger = hit || (cfg.latch && *state == PlannerState::Brake);
    *state = if trigger { PlannerState::Brake } else { PlannerState::Cruise };
    trigger
}
