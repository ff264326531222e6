//! Ego vehicle model: per-corner sprung masses on tire springs, a
//! powertrain with automatic gearbox and differential, calibrated brakes,
//! Ackermann steering, spline tire friction and piecewise aero drag.

pub mod aero;
pub mod brakes;
pub mod inertia;
pub mod params;
pub mod powertrain;
pub mod state;
pub mod steering;
pub mod suspension;
pub mod tire;
pub mod vehicle;

pub use aero::{aero_case, aero_drag, AeroCase};
pub use brakes::{brake_torque, CALIBRATION_SPEED};
pub use inertia::{aggregate_inertia, Inertia};
pub use params::{CornerParams, DragForces, Drivetrain, VehicleParams};
pub use powertrain::{differential_split, powertrain_torque, update_engine_state, DiffSplit};
pub use state::{ControlInput, Lights, VehicleState};
pub use steering::{ackermann_angles, apply_steering};
pub use suspension::{suspension_coefficients, suspension_force, SuspensionCoefficients};
pub use tire::{fit_tire_spline, tire_force, SplineControlPoints, TireSpline};
pub use vehicle::{Vehicle, DEFAULT_DT};
