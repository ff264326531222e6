//! System-under-test interface and the reference reactive emergency-braking
//! stack: synthetic detector, braking state machine and drive controller.

mod control;
mod detector;
mod external;
mod planner;
mod stack;

pub use control::{drive_controller, lighting_policy, CRUISE_GAIN};
pub use detector::{
    adjusted_miss_rate, default_profiles, detection_quality, light_boost, synth_detect, Detection, DetectorProfile, LatencyBuffer,
    MissProcess, TargetTruth,
};
pub use external::{ExternalInit, ExternalSut};
pub use planner::{aeb_plan, AebPlannerConfig, PlannerState};
pub use stack::{observe_targets, AebStack, SensorFrame, Sut};
