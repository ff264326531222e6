use nalgebra::Vector3;

use super::params::CornerParams;
use crate::error::{Error, Result};

/// Lumped mass properties of the sprung corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub mass: f64,
    pub center_of_mass: Vector3<f64>,
    /// `Σ iM·‖iX − X_COM‖²`, kg·m².
    pub moment: f64,
}

pub fn aggregate_inertia(corners: &[CornerParams]) -> Result<Inertia> {
    if corners.is_empty() {
        return Err(Error::invalid("corners", "at least one corner required"));
    }
    for (i, c) in corners.iter().enumerate() {
        if !(c.sprung_mass > 0.0) {
            return Err(Error::invalid(
                format!("corners[{i}].sprung_mass"),
                "must be > 0",
            ));
        }
    }
    let mass: f64 = corners.iter().map(|c| c.sprung_mass).sum();
    let weighted = corners
        .iter()
        .fold(Vector3::zeros(), |acc, c| acc + Vector3::from(c.mount_position) * c.sprung_mass);
    let center_of_mass = weighted / mass;
    let moment = corners
        .iter()
        .map(|c| c.sprung_mass * (Vector3::from(c.mount_position) - center_of_mass).norm_squared())
        .sum();
    Ok(Inertia {
        mass,
        center_of_mass,
        moment,
    })
}
