use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orthonormality_error, Pose};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lights {
    #[default]
    Off,
    LowBeam,
    HighBeam,
    Fog,
}

impl Lights {
    pub fn as_str(self) -> &'static str {
        match self {
            Lights::Off => "off",
            Lights::LowBeam => "low_beam",
            Lights::HighBeam => "high_beam",
            Lights::Fog => "fog",
        }
    }
}

impl fmt::Display for Lights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lights {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Lights::Off),
            "low_beam" => Ok(Lights::LowBeam),
            "high_beam" => Ok(Lights::HighBeam),
            "fog" => Ok(Lights::Fog),
            _ => Err(Error::Config(format!("unknown lights setting `{s}`"))),
        }
    }
}

/// Driver commands for one tick. Omitted fields deserialize to zero/off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlInput {
    pub throttle: f64,
    /// Commanded virtual steering angle, rad, positive left.
    pub steering: f64,
    pub brake: f64,
    pub handbrake: bool,
    pub lights: Lights,
    /// Request reverse gear. Only honoured near standstill.
    pub reverse: bool,
}

/// Evolving state of the ego vehicle.
///
/// Planar velocities are body-frame values at the center of mass. Vertical
/// displacements are measured from the unloaded spring and tire lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub time: f64,
    /// Body frame in the world frame.
    pub pose: Pose,
    pub heading: f64,
    /// Longitudinal velocity, m/s, signed along the heading.
    pub velocity: f64,
    pub lateral_velocity: f64,
    /// Roll, pitch and yaw rates, rad/s.
    pub angular_velocity: [f64; 3],
    /// Wheel spin, rad/s, in corner order FL, FR, RL, RR.
    pub wheel_speed: [f64; 4],
    pub wheel_deflection: [f64; 4],
    pub wheel_deflection_rate: [f64; 4],
    pub body_deflection: [f64; 4],
    pub body_deflection_rate: [f64; 4],
    pub wheel_revolutions: [f64; 4],
    pub engine_rpm: f64,
    pub gear: i32,
    pub steering_angle: f64,
    /// Last computed powertrain torque, N·m.
    pub output_torque: f64,
    /// Smoothed throttle.
    pub throttle_state: f64,
}

impl VehicleState {
    pub fn wheel_rpm(&self) -> [f64; 4] {
        self.wheel_speed.map(rad_s_to_rpm)
    }

    pub fn mean_wheel_rpm(&self) -> f64 {
        self.wheel_rpm().iter().sum::<f64>() / 4.0
    }

    pub fn mean_abs_wheel_rpm(&self) -> f64 {
        self.wheel_rpm().iter().map(|w| w.abs()).sum::<f64>() / 4.0
    }

    pub fn position(&self) -> [f64; 3] {
        [self.pose[(0, 3)], self.pose[(1, 3)], self.pose[(2, 3)]]
    }

    pub fn speed(&self) -> f64 {
        self.velocity.hypot(self.lateral_velocity)
    }

    pub fn check(&self) -> Result<()> {
        if orthonormality_error(&self.pose) >= 1e-9 {
            return Err(Error::InvalidState("pose rotation is not orthonormal".into()));
        }
        if self.engine_rpm < 0.0 {
            return Err(Error::InvalidState("negative engine speed".into()));
        }
        Ok(())
    }
}

pub(crate) fn rad_s_to_rpm(w: f64) -> f64 {
    w * 60.0 / std::f64::consts::TAU
}
