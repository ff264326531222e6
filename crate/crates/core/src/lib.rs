//! Core models for a desk-scale virtual proving ground.
//!
//! The crate is split along the simulation pipeline:
//!
//! * [`dynamics`] integrates the ego vehicle (suspension, powertrain, brakes,
//!   steering, tires, aero) on a fixed timestep.
//! * [`sensors`] turns vehicle state and scene geometry into encoder, INS,
//!   camera and LIDAR readings.
//! * [`scenario`] builds scenes, derives environmental conditions and expands
//!   test matrices into batched test cases.
//! * [`sut`] holds the pluggable system-under-test interface and the reference
//!   reactive emergency-braking stack.
//! * [`kpi`] computes per-tick KPIs, verdicts and campaign-level reports.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod kpi;
pub mod scenario;
pub mod sensors;
pub mod sut;

pub use error::{Error, Result};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;
