use serde::{Deserialize, Serialize};

use super::control::{drive_controller, lighting_policy, CRUISE_GAIN};
use super::detector::{synth_detect, Detection, DetectorProfile, LatencyBuffer, MissProcess, TargetTruth};
use super::planner::{aeb_plan, AebPlannerConfig, PlannerState};
use crate::dynamics::{ControlInput, Lights, VehicleState};
use crate::error::Result;
use crate::geometry::{rigid_inverse, translation_of, Pose};
use crate::scenario::{Conditions, Scene};
use crate::sensors::{camera_projection_matrix, project_point, CameraConfig, InsReading};

/// Everything the SUT sees in one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub t: f64,
    pub ins: InsReading,
    pub encoder_ticks: [i64; 4],
    pub targets: Vec<TargetTruth>,
    /// Point count and nearest return of the latest LIDAR scan.
    pub lidar_points: usize,
    pub lidar_min_range: Option<f64>,
}

/// Three-stage system under test. Called once per simulation tick in the
/// order perceive, plan, act.
pub trait Sut {
    fn perceive(&mut self, frame: &SensorFrame, conditions: &Conditions) -> Result<Vec<Detection>>;
    fn plan(&mut self, detections: &[Detection]) -> Result<bool>;
    fn act(&mut self, trigger: bool, state: &VehicleState) -> Result<ControlInput>;
}

/// Camera-relative ground truth for every solid obstacle.
pub fn observe_targets(vehicle_pose: &Pose, camera: &CameraConfig, scene: &Scene) -> Vec<TargetTruth> {
    let cam_pose = vehicle_pose * camera.mount();
    let cam_pos = translation_of(&cam_pose);
    let view = rigid_inverse(&cam_pose);
    let proj = camera_projection_matrix(&camera.intrinsics);
    scene
        .solid_obstacles()
        .map(|o| {
            let range = match o.oriented_box() {
                Some(b) => b.distance_to_point(&cam_pos),
                None => ((o.position() - cam_pos).norm() - 0.5 * o.height()).max(0.0),
            };
            let in_view = project_point(
                &o.position(),
                &view,
                &proj,
                camera.intrinsics.width,
                camera.intrinsics.height,
            )
            .is_some();
            TargetTruth { class_tag: o.tag.clone(), range, height: o.height(), in_view }
        })
        .collect()
}

/// Reference reactive braking stack.
#[derive(Debug, Clone)]
pub struct AebStack {
    pub profile: DetectorProfile,
    pub planner: AebPlannerConfig,
    pub state: PlannerState,
    pub target_speed: f64,
    pub gain: f64,
    k_proj: f64,
    miss: MissProcess,
    latency: LatencyBuffer,
    lights: Lights,
}

impl AebStack {
    pub fn new(
        profile: DetectorProfile,
        planner: AebPlannerConfig,
        camera: &CameraConfig,
        target_speed: f64,
        seed: u64,
        dt: f64,
    ) -> Self {
        let latency = LatencyBuffer::new(profile.latency_ticks);
        AebStack {
            profile,
            planner,
            state: PlannerState::Cruise,
            target_speed,
            gain: CRUISE_GAIN,
            k_proj: camera.intrinsics.k_proj(),
            miss: MissProcess::new(seed, dt, MissProcess::DEFAULT_TAU),
            latency,
            lights: Lights::Off,
        }
    }
}

impl Sut for AebStack {
    fn perceive(&mut self, frame: &SensorFrame, conditions: &Conditions) -> Result<Vec<Detection>> {
        self.lights = lighting_policy(conditions.ambient_light, conditions.fog_present);
        let draw = self.miss.next_draw();
        let now = synth_detect(&frame.targets, conditions, self.lights, &self.profile, self.k_proj, draw);
        Ok(self.latency.push(now))
    }

    fn plan(&mut self, detections: &[Detection]) -> Result<bool> {
        Ok(aeb_plan(detections, &self.planner, &mut self.state))
    }

    fn act(&mut self, trigger: bool, state: &VehicleState) -> Result<ControlInput> {
        let mut input = drive_controller(trigger, state.velocity, self.target_speed, self.gain);
        input.lights = self.lights;
        Ok(input)
    }
}
