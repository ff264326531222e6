//! Two-piece cubic friction curve.
//!
//! The rising piece runs from the origin point to the extremum (peak) and the
//! falling piece from the extremum to the asymptote. Both pieces are cubic
//! Hermite segments with zero slope at the peak and at the asymptote; the
//! slope at the origin is `2·(Fe − F0)/(Se − S0)`, which makes the rising
//! piece a monotone quadratic. Slip beyond the asymptote is flat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Control points `[slip, normalized force]` of a friction curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineControlPoints {
    pub origin: [f64; 2],
    pub extremum: [f64; 2],
    pub asymptote: [f64; 2],
}

impl SplineControlPoints {
    pub fn validate(&self, name: &str) -> Result<()> {
        let [s0, _] = self.origin;
        let [se, fe] = self.extremum;
        let [sa, fa] = self.asymptote;
        if !(s0 < se && se < sa) {
            return Err(Error::invalid(
                name,
                format!("slip breakpoints must satisfy S0 < Se < Sa, got {s0}, {se}, {sa}"),
            ));
        }
        if fe < fa {
            return Err(Error::invalid(
                name,
                format!("extremum force {fe} must not be below asymptote force {fa}"),
            ));
        }
        Ok(())
    }
}

/// Power-basis cubic `a·S³ + b·S² + c·S + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cubic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Cubic {
    /// Hermite segment on `[x0, x1]` with endpoint values and slopes.
    fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> Self {
        let h = x1 - x0;
        let delta = (y1 - y0) / h;
        // Shifted form y0 + m0·u + c2·u² + c3·u³ with u = S − x0.
        let c2 = (3.0 * delta - 2.0 * m0 - m1) / h;
        let c3 = (m0 + m1 - 2.0 * delta) / (h * h);
        Cubic {
            a: c3,
            b: c2 - 3.0 * c3 * x0,
            c: m0 - 2.0 * c2 * x0 + 3.0 * c3 * x0 * x0,
            d: y0 - m0 * x0 + c2 * x0 * x0 - c3 * x0 * x0 * x0,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        ((self.a * s + self.b) * s + self.c) * s + self.d
    }

    pub fn derivative(&self, s: f64) -> f64 {
        (3.0 * self.a * s + 2.0 * self.b) * s + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TireSpline {
    pub rising: Cubic,
    pub falling: Cubic,
    pub points: SplineControlPoints,
}

pub fn fit_tire_spline(points: &SplineControlPoints) -> Result<TireSpline> {
    points.validate("tire spline")?;
    let [s0, f0] = points.origin;
    let [se, fe] = points.extremum;
    let [sa, fa] = points.asymptote;
    let m0 = 2.0 * (fe - f0) / (se - s0);
    Ok(TireSpline {
        rising: Cubic::hermite(s0, se, f0, fe, m0, 0.0),
        falling: Cubic::hermite(se, sa, fe, fa, 0.0, 0.0),
        points: *points,
    })
}

impl TireSpline {
    /// Normalized force for a non-negative slip magnitude. Flat below the
    /// origin slip and beyond the asymptote.
    pub fn eval(&self, slip: f64) -> f64 {
        let [s0, f0] = self.points.origin;
        let se = self.points.extremum[0];
        let [sa, fa] = self.points.asymptote;
        if slip < s0 {
            f0
        } else if slip < se {
            self.rising.eval(slip)
        } else if slip < sa {
            self.falling.eval(slip)
        } else {
            fa
        }
    }

    pub fn derivative(&self, slip: f64) -> f64 {
        let s0 = self.points.origin[0];
        let se = self.points.extremum[0];
        let sa = self.points.asymptote[0];
        if slip < s0 || slip >= sa {
            0.0
        } else if slip < se {
            self.rising.derivative(slip)
        } else {
            self.falling.derivative(slip)
        }
    }
}

/// Tire force, N: `sign(S)·F(|S|)·load·traction`.
pub fn tire_force(spline: &TireSpline, slip: f64, normal_load: f64, traction_scale: f64) -> f64 {
    if slip == 0.0 {
        return 0.0;
    }
    slip.signum() * spline.eval(slip.abs()) * normal_load * traction_scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_points() -> SplineControlPoints {
        SplineControlPoints {
            origin: [0.0, 0.0],
            extremum: [0.2, 1.0],
            asymptote: [0.6, 0.75],
        }
    }

    /// Independent Hermite evaluation with the textbook basis functions.
    fn hermite_oracle(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
        let h = x1 - x0;
        let t = (x - x0) / h;
        let h00 = 2.0 * t.powi(3) - 3.0 * t.powi(2) + 1.0;
        let h10 = t.powi(3) - 2.0 * t.powi(2) + t;
        let h01 = -2.0 * t.powi(3) + 3.0 * t.powi(2);
        let h11 = t.powi(3) - t.powi(2);
        h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
    }

    #[test]
    fn interpolation_conditions() {
        let s = fit_tire_spline(&reference_points()).unwrap();
        assert!((s.rising.eval(0.0) - 0.0).abs() < 1e-9);
        assert!((s.rising.eval(0.2) - 1.0).abs() < 1e-9);
        assert!((s.falling.eval(0.2) - 1.0).abs() < 1e-9);
        assert!(s.rising.derivative(0.2).abs() < 1e-9);
        assert!(s.falling.derivative(0.2).abs() < 1e-9);
        assert!((s.falling.eval(0.6) - 0.75).abs() < 1e-9);
        assert!(s.falling.derivative(0.6).abs() < 1e-9);
    }

    #[test]
    fn golden_values() {
        let s = fit_tire_spline(&reference_points()).unwrap();
        // Midpoint of a zero-slope Hermite segment is the mean of its ends.
        assert!((s.eval(0.4) - 0.875).abs() < 1e-9);
        let oracle = hermite_oracle(0.0, 0.2, 0.0, 1.0, 10.0, 0.0, 0.1);
        assert!((oracle - 0.75).abs() < 1e-12);
        assert!((s.eval(0.1) - oracle).abs() < 1e-9);
    }

    #[test]
    fn flat_beyond_asymptote() {
        let s = fit_tire_spline(&reference_points()).unwrap();
        assert_eq!(s.eval(0.6), 0.75);
        assert_eq!(s.eval(5.0), 0.75);
    }

    #[test]
    fn rejects_unordered_points() {
        let mut p = reference_points();
        p.extremum[0] = 0.7;
        assert!(matches!(fit_tire_spline(&p), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn force_examples() {
        let s = fit_tire_spline(&reference_points()).unwrap();
        assert_eq!(tire_force(&s, 0.0, 4000.0, 1.0), 0.0);
        assert!((tire_force(&s, 0.2, 4000.0, 1.0) - 4000.0).abs() < 1e-9);
        assert_eq!(tire_force(&s, -0.2, 4000.0, 1.0), -tire_force(&s, 0.2, 4000.0, 1.0));
        assert!((tire_force(&s, 0.2, 4000.0, 0.5) - 2000.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn pieces_match_hermite_oracle(x in 0.0f64..0.6) {
            let s = fit_tire_spline(&reference_points()).unwrap();
            let expected = if x < 0.2 {
                hermite_oracle(0.0, 0.2, 0.0, 1.0, 10.0, 0.0, x)
            } else {
                hermite_oracle(0.2, 0.6, 1.0, 0.75, 0.0, 0.0, x)
            };
            prop_assert!((s.eval(x) - expected).abs() < 1e-9);
        }

        #[test]
        fn rising_piece_is_monotone(a in 0.0f64..0.2, b in 0.0f64..0.2) {
            let s = fit_tire_spline(&reference_points()).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(s.eval(lo) <= s.eval(hi) + 1e-15);
        }

        #[test]
        fn force_is_odd(slip in -2.0f64..2.0, load in 0.0f64..1e4) {
            let s = fit_tire_spline(&reference_points()).unwrap();
            prop_assert_eq!(tire_force(&s, -slip, load, 1.0), -tire_force(&s, slip, load, 1.0));
        }
    }
}
