use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::NoiseSource;
use crate::error::{Error, Result};
use crate::geometry::{pose_xyz_rpy, ray_plane, ray_sphere, rotation_of, translation_of, Pose};
use crate::scenario::{Scene, Shape};

/// Scan geometry. Azimuth θ is measured from +x toward +y, elevation φ is
/// positive downward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarConfig {
    /// Sensor position in the vehicle frame, m.
    pub mount_position: [f64; 3],
    /// Sensor roll, pitch, yaw in the vehicle frame, rad.
    #[serde(default)]
    pub mount_rpy: [f64; 3],
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_res: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_res: f64,
    /// Scans per second.
    pub update_rate: f64,
}

impl Default for LidarConfig {
    /// Roof sensor, 16 channels over ±15°, 1° azimuth steps across the
    /// forward half-plane.
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        LidarConfig {
            mount_position: [0.5, 0.0, 0.8],
            mount_rpy: [0.0; 3],
            r_min: 0.5,
            r_max: 100.0,
            theta_min: -90.0 * deg,
            theta_max: 90.0 * deg,
            theta_res: 1.0 * deg,
            phi_min: -15.0 * deg,
            phi_max: 15.0 * deg,
            phi_res: 2.0 * deg,
            update_rate: 10.0,
        }
    }
}

impl LidarConfig {
    pub fn mount(&self) -> Pose {
        let [x, y, z] = self.mount_position;
        let [r, p, yaw] = self.mount_rpy;
        pose_xyz_rpy(x, y, z, r, p, yaw)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.r_min && self.r_min < self.r_max) {
            return Err(Error::invalid("lidar.r_min", "must satisfy 0 <= r_min < r_max"));
        }
        if !(self.theta_res > 0.0) {
            return Err(Error::invalid("lidar.theta_res", "must be > 0"));
        }
        if !(self.phi_res > 0.0) {
            return Err(Error::invalid("lidar.phi_res", "must be > 0"));
        }
        if self.theta_max < self.theta_min || self.phi_max < self.phi_min {
            return Err(Error::invalid("lidar", "angle ranges must have min <= max"));
        }
        if !(self.update_rate > 0.0) {
            return Err(Error::invalid("lidar.update_rate", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub timestamp: f64,
    /// Hits in the sensor frame, m.
    pub points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn ranges(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| Vector3::from(*p).norm())
    }

    pub fn min_range(&self) -> Option<f64> {
        self.ranges().min_by(f64::total_cmp)
    }
}

/// Unit ray `[cosθ·cosφ, sinθ·cosφ, −sinφ]`.
pub fn ray_direction(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(ct * cp, st * cp, -sp)
}

/// Grid samples `min + k·res` for `k = 0..` up to and including `max`.
fn grid(min: f64, max: f64, res: f64) -> Vec<f64> {
    let n = ((max - min) / res + 1e-9).floor() as usize + 1;
    (0..n).map(|k| min + k as f64 * res).collect()
}

/// `(θ, φ)` pairs in scan order: θ-major, φ varying fastest.
pub fn scan_angles(cfg: &LidarConfig) -> Vec<(f64, f64)> {
    let phis = grid(cfg.phi_min, cfg.phi_max, cfg.phi_res);
    grid(cfg.theta_min, cfg.theta_max, cfg.theta_res)
        .into_iter()
        .flat_map(|t| phis.iter().map(move |p| (t, *p)))
        .collect()
}

fn nearest_hit(scene: &Scene, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    scene
        .obstacles
        .iter()
        .filter_map(|o| match o.shape {
            Shape::Box { .. } => o.oriented_box().and_then(|b| b.ray_hit(origin, dir, 0.0)),
            Shape::Sphere { radius } => ray_sphere(origin, dir, &o.position(), radius, 0.0),
            Shape::Plane => ray_plane(origin, dir, &o.position(), &o.normal(), 0.0),
        })
        .min_by(f64::total_cmp)
}

/// Casts every ray of the scan grid from the sensor at
/// `vehicle_pose · cfg.mount()` and returns the thresholded hits in the sensor
/// frame. Range noise is drawn serially in scan order, so the cloud does not
/// depend on `parallel`.
pub fn lidar_scan(
    vehicle_pose: &Pose,
    cfg: &LidarConfig,
    scene: &Scene,
    noise: &mut NoiseSource,
    timestamp: f64,
    parallel: bool,
) -> PointCloud {
    let sensor = vehicle_pose * cfg.mount();
    let origin = translation_of(&sensor);
    let rot = rotation_of(&sensor);
    let angles = scan_angles(cfg);
    let cast = |&(theta, phi): &(f64, f64)| {
        let d = ray_direction(theta, phi);
        nearest_hit(scene, &origin, &(rot * d)).map(|t| (d, t))
    };
    let hits: Vec<Option<(Vector3<f64>, f64)>> = if parallel {
        angles.par_iter().map(cast).collect()
    } else {
        angles.iter().map(cast).collect()
    };
    let points = hits
        .into_iter()
        .flatten()
        .filter_map(|(d, t)| {
            let r = t + noise.sample();
            (r >= cfg.r_min && r <= cfg.r_max).then(|| (d * r).into())
        })
        .collect();
    PointCloud { timestamp, points }
}
