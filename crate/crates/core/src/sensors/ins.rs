use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::noise::NoiseSource;
use crate::error::{Error, Result};
use crate::geometry::{orthonormality_error, rotation_of, translation_of, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsReading {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    /// World-frame velocity, m/s.
    pub velocity: Vector3<f64>,
    /// Body-frame angular rate, rad/s.
    pub angular_rate: Vector3<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Decomposes the vehicle pose into an INS reading. Rates are finite
/// differences against `previous` over `dt` and zero without one.
pub fn ins_read(
    pose: &Pose,
    previous: Option<&Pose>,
    dt: f64,
    noise: &mut NoiseSource,
) -> Result<InsReading> {
    if orthonormality_error(pose) >= ORTHONORMAL_TOL {
        return Err(Error::InvalidState("INS pose rotation is not orthonormal".into()));
    }
    let rotation = rotation_of(pose);
    let position = translation_of(pose);
    let (velocity, angular_rate) = match previous {
        Some(prev) if dt > 0.0 => {
            if orthonormality_error(prev) >= ORTHONORMAL_TOL {
                return Err(Error::InvalidState("previous INS pose is not orthonormal".into()));
            }
            let v = (position - translation_of(prev)) / dt;
            let rel = Rotation3::from_matrix_unchecked(rotation_of(prev).transpose() * rotation);
            (v, rel.scaled_axis() / dt)
        }
        _ => (Vector3::zeros(), Vector3::zeros()),
    };
    let orientation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rotation));
    if !noise.model().enabled {
        return Ok(InsReading { position, orientation, velocity, angular_rate });
    }
    let mut jitter = || Vector3::new(noise.sample(), noise.sample(), noise.sample());
    let position = position + jitter();
    let tilt = jitter();
    let velocity = velocity + jitter();
    let angular_rate = angular_rate + jitter();
    Ok(InsReading {
        position,
        orientation: orientation * UnitQuaternion::from_scaled_axis(tilt),
        velocity,
        angular_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pose_xyz_rpy;
    use crate::sensors::NoiseModel;

    #[test]
    fn identity_and_translation() {
        let r = ins_read(&Pose::identity(), None, 0.01, &mut NoiseSource::off()).unwrap();
        assert_eq!(r.position, Vector3::zeros());
        assert_eq!(r.orientation, UnitQuaternion::identity());

        let r = ins_read(&pose_xyz_rpy(1.0, 2.0, 3.0, 0.0, 0.0, 0.0), None, 0.01, &mut NoiseSource::off()).unwrap();
        assert_eq!(r.position, Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn round_trips_pose() {
        let pose = pose_xyz_rpy(4.0, -1.0, 0.5, 0.1, -0.2, 2.5);
        let r = ins_read(&pose, None, 0.01, &mut NoiseSource::off()).unwrap();
        let back = r.orientation.to_rotation_matrix();
        assert!((back.matrix() - rotation_of(&pose)).norm() < 1e-12);
        assert_eq!(r.position, translation_of(&pose));
    }

    #[test]
    fn finite_difference_rates() {
        let a = pose_xyz_rpy(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let b = pose_xyz_rpy(0.1, 0.0, 0.0, 0.0, 0.0, 0.002);
        let r = ins_read(&b, Some(&a), 0.01, &mut NoiseSource::off()).unwrap();
        assert!((r.velocity - Vector3::new(10.0, 0.0, 0.0)).norm() < 1e-9);
        assert!((r.angular_rate - Vector3::new(0.0, 0.0, 0.2)).norm() < 1e-9);
    }

    #[test]
    fn rejects_skewed_rotation() {
        let mut pose = Pose::identity();
        pose[(0, 1)] = 0.1;
        assert!(matches!(
            ins_read(&pose, None, 0.01, &mut NoiseSource::off()),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn seeded_noise_reproducible() {
        let model = NoiseModel { enabled: true, seed: 42, std_dev: 0.1, ..NoiseModel::default() };
        let pose = pose_xyz_rpy(1.0, 2.0, 3.0, 0.0, 0.0, 0.3);
        let a = ins_read(&pose, None, 0.01, &mut NoiseSource::new(model)).unwrap();
        let b = ins_read(&pose, None, 0.01, &mut NoiseSource::new(model)).unwrap();
        assert_eq!(a.position.map(f64::to_bits), b.position.map(f64::to_bits));
        assert_eq!(a.orientation.coords.map(f64::to_bits), b.orientation.coords.map(f64::to_bits));
        assert_ne!(a.position, Vector3::new(1.0, 2.0, 3.0));
    }
}
