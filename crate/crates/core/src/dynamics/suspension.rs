use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspensionCoefficients {
    /// Stiffness, N/m.
    pub stiffness: f64,
    /// Damping, N·s/m.
    pub damping: f64,
}

/// `K = M·ωn²`, `B = 2·ζ·√(K·M)`.
pub fn suspension_coefficients(
    sprung_mass: f64,
    natural_frequency: f64,
    damping_ratio: f64,
) -> Result<SuspensionCoefficients> {
    if !(sprung_mass > 0.0) {
        return Err(Error::invalid("sprung_mass", "must be > 0"));
    }
    if !(natural_frequency > 0.0) {
        return Err(Error::invalid("natural_frequency", "must be > 0"));
    }
    if !(damping_ratio >= 0.0) {
        return Err(Error::invalid("damping_ratio", "must be >= 0"));
    }
    let stiffness = sprung_mass * natural_frequency * natural_frequency;
    let damping = 2.0 * damping_ratio * (stiffness * sprung_mass).sqrt();
    Ok(SuspensionCoefficients { stiffness, damping })
}

/// Vertical force on a wheel body, positive up.
///
/// `z`/`z_rate` describe the wheel and `body`/`body_rate` the sprung corner it
/// hangs from; displacements are measured from the unloaded spring length.
/// Pass `gravity = 0` to get the suspension force alone.
pub fn suspension_force(
    coeffs: &SuspensionCoefficients,
    wheel_mass: f64,
    z: f64,
    z_rate: f64,
    body: f64,
    body_rate: f64,
    gravity: f64,
) -> f64 {
    -(coeffs.damping * (z_rate - body_rate) + coeffs.stiffness * (z - body)) - wheel_mass * gravity
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coefficient_examples() {
        let c = suspension_coefficients(500.0, 2.0, 0.5).unwrap();
        assert!((c.stiffness - 2000.0).abs() < 1e-9);
        assert!((c.damping - 2.0 * 0.5 * 1.0e6f64.sqrt()).abs() < 1e-9);
        assert!((c.damping - 1000.0).abs() < 1e-9);

        assert_eq!(suspension_coefficients(500.0, 2.0, 0.0).unwrap().damping, 0.0);

        let unit = suspension_coefficients(1.0, 1.0, 1.0).unwrap();
        assert_eq!((unit.stiffness, unit.damping), (1.0, 2.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(suspension_coefficients(0.0, 1.0, 0.1).is_err());
        assert!(suspension_coefficients(1.0, 0.0, 0.1).is_err());
        assert!(suspension_coefficients(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn force_examples() {
        let c = SuspensionCoefficients {
            stiffness: 2000.0,
            damping: 1000.0,
        };
        assert_eq!(suspension_force(&c, 25.0, 0.3, 0.1, 0.3, 0.1, 0.0), 0.0);
        assert!((suspension_force(&c, 25.0, 0.1, 0.0, 0.0, 0.0, 0.0) + 200.0).abs() < 1e-9);
        assert!((suspension_force(&c, 25.0, 0.0, 0.2, 0.0, 0.0, 0.0) + 200.0).abs() < 1e-9);
        assert!((suspension_force(&c, 25.0, 0.0, 0.0, 0.0, 0.0, 9.81) + 25.0 * 9.81).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn coefficients_round_trip(m in 1.0f64..2000.0, wn in 0.1f64..30.0, zeta in 0.0f64..2.0) {
            let c = suspension_coefficients(m, wn, zeta).unwrap();
            let wn_back = (c.stiffness / m).sqrt();
            let zeta_back = c.damping / (2.0 * (c.stiffness * m).sqrt());
            prop_assert!((wn_back - wn).abs() <= 1e-12 * wn.max(1.0));
            prop_assert!((zeta_back - zeta).abs() <= 1e-12 * zeta.max(1.0));
        }
    }
}
