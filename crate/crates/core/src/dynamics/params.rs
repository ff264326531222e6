use serde::{Deserialize, Serialize};

use super::tire::SplineControlPoints;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerParams {
    /// Sprung mass carried by this corner, kg.
    pub sprung_mass: f64,
    /// Unsprung (wheel + tire) mass, kg.
    pub wheel_mass: f64,
    /// Suspension natural frequency, rad/s.
    pub natural_frequency: f64,
    pub damping_ratio: f64,
    /// Corner mount point in the body frame, m.
    pub mount_position: [f64; 3],
}

impl CornerParams {
    pub fn validate(&self, idx: usize) -> Result<()> {
        let name = |f: &str| format!("corners[{idx}].{f}");
        if !(self.sprung_mass > 0.0) {
            return Err(Error::invalid(name("sprung_mass"), "must be > 0"));
        }
        if !(self.wheel_mass > 0.0) {
            return Err(Error::invalid(name("wheel_mass"), "must be > 0"));
        }
        if !(self.natural_frequency > 0.0) {
            return Err(Error::invalid(name("natural_frequency"), "must be > 0"));
        }
        if !(self.damping_ratio >= 0.0) {
            return Err(Error::invalid(name("damping_ratio"), "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Drivetrain {
    Fwd,
    Rwd,
    Awd,
}

impl Drivetrain {
    /// Driven-wheel mask in corner order FL, FR, RL, RR.
    pub fn driven(self) -> [bool; 4] {
        match self {
            Drivetrain::Fwd => [true, true, false, false],
            Drivetrain::Rwd => [false, false, true, true],
            Drivetrain::Awd => [true; 4],
        }
    }
}

/// Aerodynamic drag force levels, N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragForces {
    pub max: f64,
    pub idle: f64,
    pub rev: f64,
    pub run: f64,
}

/// Calibration constants of the ego vehicle.
///
/// Corners are ordered front-left, front-right, rear-left, rear-right. The
/// body frame is +x forward, +y left, +z up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub corners: Vec<CornerParams>,
    pub wheelbase: f64,
    pub track_width: f64,
    pub tire_radius: f64,
    /// Lever radius at which the calibrated braking force acts, m.
    pub brake_disk_radius: f64,
    /// Stopping distance from the 60 mph calibration speed, m.
    pub braking_distance: f64,
    /// Engine torque map as `[rpm, N·m]` points, ascending in rpm.
    pub engine_torque_curve: Vec<[f64; 2]>,
    /// Forward gear ratios, first gear first. Gear index `n ≥ 1` selects
    /// `gear_ratios[n - 1]`.
    pub gear_ratios: Vec<f64>,
    /// Ratio of gear index −1.
    pub reverse_ratio: f64,
    pub final_drive: f64,
    pub idle_rpm: f64,
    pub shift_up_rpm: f64,
    pub shift_down_rpm: f64,
    pub drivetrain: Drivetrain,
    pub torque_drop: f64,
    /// Steering rate at standstill, rad/s.
    pub steer_sensitivity: f64,
    /// Speed-dependent steering rate term, rad/s at `v_max`.
    pub steer_speed_factor: f64,
    pub max_steer: f64,
    pub v_max: f64,
    pub v_rev: f64,
    pub drag: DragForces,
    pub tire_long: SplineControlPoints,
    pub tire_lat: SplineControlPoints,
    /// Vertical tire stiffness, N/m.
    pub tire_stiffness: f64,
    /// Height of the body origin above ground with unloaded springs, m.
    pub ride_height: f64,
    /// Bounding box of the body (length, width, height), m, centered on the
    /// body origin.
    pub body_dimensions: [f64; 3],
}

impl Default for VehicleParams {
    /// Stand-in calibration: flat 300 N·m engine, six-speed box, 2000 kg
    /// sprung mass split evenly over the corners.
    fn default() -> Self {
        let corner = |x: f64, y: f64| CornerParams {
            sprung_mass: 500.0,
            wheel_mass: 25.0,
            natural_frequency: 9.0,
            damping_ratio: 0.35,
            mount_position: [x, y, 0.0],
        };
        VehicleParams {
            corners: vec![
                corner(1.4, 0.8),
                corner(1.4, -0.8),
                corner(-1.4, 0.8),
                corner(-1.4, -0.8),
            ],
            wheelbase: 2.8,
            track_width: 1.6,
            tire_radius: 0.36,
            brake_disk_radius: 0.36,
            braking_distance: 45.0,
            engine_torque_curve: vec![[1000.0, 300.0], [5000.0, 300.0]],
            gear_ratios: vec![4.7, 3.1, 2.1, 1.6, 1.2, 1.0],
            reverse_ratio: -4.0,
            final_drive: 3.5,
            idle_rpm: 800.0,
            shift_up_rpm: 4500.0,
            shift_down_rpm: 1800.0,
            drivetrain: Drivetrain::Rwd,
            torque_drop: 0.5,
            steer_sensitivity: 1.0,
            steer_speed_factor: -0.5,
            max_steer: 0.6,
            v_max: 40.0,
            v_rev: 5.0,
            drag: DragForces {
                max: 4000.0,
                idle: 250.0,
                rev: 300.0,
                run: 350.0,
            },
            tire_long: SplineControlPoints {
                origin: [0.0, 0.0],
                extremum: [0.2, 1.0],
                asymptote: [0.6, 0.75],
            },
            tire_lat: SplineControlPoints {
                origin: [0.0, 0.0],
                extremum: [0.15, 1.0],
                asymptote: [0.5, 0.85],
            },
            tire_stiffness: 200_000.0,
            ride_height: 0.95,
            body_dimensions: [4.6, 1.9, 1.4],
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be a finite value > 0, got {v}")))
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if self.corners.len() != 4 {
            return Err(Error::invalid(
                "corners",
                format!("expected 4 corners, got {}", self.corners.len()),
            ));
        }
        for (i, c) in self.corners.iter().enumerate() {
            c.validate(i)?;
        }
        positive("wheelbase", self.wheelbase)?;
        positive("track_width", self.track_width)?;
        positive("tire_radius", self.tire_radius)?;
        positive("brake_disk_radius", self.brake_disk_radius)?;
        positive("braking_distance", self.braking_distance)?;
        positive("final_drive", self.final_drive)?;
        positive("v_max", self.v_max)?;
        positive("tire_stiffness", self.tire_stiffness)?;
        positive("max_steer", self.max_steer)?;
        if self.max_steer >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("max_steer", "must be below π/2"));
        }
        if !(self.v_rev >= 0.0) {
            return Err(Error::invalid("v_rev", "must be >= 0"));
        }
        if !(self.idle_rpm >= 0.0) {
            return Err(Error::invalid("idle_rpm", "must be >= 0"));
        }
        if self.gear_ratios.is_empty() {
            return Err(Error::invalid("gear_ratios", "at least one forward gear required"));
        }
        if self.gear_ratios.iter().any(|g| *g <= 0.0 || !g.is_finite()) {
            return Err(Error::invalid("gear_ratios", "forward ratios must be > 0"));
        }
        if self.reverse_ratio == 0.0 || !self.reverse_ratio.is_finite() {
            return Err(Error::invalid("reverse_ratio", "must be nonzero"));
        }
        if self.shift_down_rpm >= self.shift_up_rpm {
            return Err(Error::invalid(
                "shift_down_rpm",
                "must be below shift_up_rpm",
            ));
        }
        if self.engine_torque_curve.is_empty() {
            return Err(Error::invalid("engine_torque_curve", "needs at least one point"));
        }
        if self
            .engine_torque_curve
            .windows(2)
            .any(|w| w[1][0] <= w[0][0])
        {
            return Err(Error::invalid(
                "engine_torque_curve",
                "rpm values must be strictly ascending",
            ));
        }
        if !(self.torque_drop >= 0.0 && self.torque_drop.is_finite()) {
            return Err(Error::invalid("torque_drop", "must be >= 0"));
        }
        if self.body_dimensions.iter().any(|d| *d <= 0.0) {
            return Err(Error::invalid("body_dimensions", "must be > 0"));
        }
        self.tire_long.validate("tire_long")?;
        self.tire_lat.validate("tire_lat")?;
        Ok(())
    }

    /// Ratio for a gear index, `None` when out of range (0 is not a gear).
    pub fn gear_ratio(&self, gear: i32) -> Option<f64> {
        match gear {
            -1 => Some(self.reverse_ratio),
            g if g >= 1 => self.gear_ratios.get(g as usize - 1).copied(),
            _ => None,
        }
    }

    pub fn top_gear(&self) -> i32 {
        self.gear_ratios.len() as i32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_validate() {
        VehicleParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = VehicleParams::default();
        p.corners[2].sprung_mass = 0.0;
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { ref name, .. }) if name == "corners[2].sprung_mass"
        ));

        let mut p = VehicleParams::default();
        p.shift_down_rpm = p.shift_up_rpm;
        assert!(p.validate().is_err());

        let mut p = VehicleParams::default();
        p.gear_ratios[3] = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn gear_lookup() {
        let p = VehicleParams::default();
        assert_eq!(p.gear_ratio(1), Some(4.7));
        assert_eq!(p.gear_ratio(6), Some(1.0));
        assert_eq!(p.gear_ratio(-1), Some(-4.0));
        assert_eq!(p.gear_ratio(0), None);
        assert_eq!(p.gear_ratio(7), None);
    }
}
