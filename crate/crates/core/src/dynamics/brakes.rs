/// 60 mph in m/s; the speed at which the braking distance is calibrated.
pub const CALIBRATION_SPEED: f64 = 26.8224;

/// `M·v²/(2·D)·R`: torque that stops mass `M` from speed `v` within `D`
/// when applied at lever radius `R`.
pub fn brake_torque_capacity(sprung_mass: f64, speed: f64, braking_distance: f64, disk_radius: f64) -> f64 {
    sprung_mass * speed * speed / (2.0 * braking_distance) * disk_radius
}

/// Brake torque for a pedal position in `[0, 1]`.
///
/// The speed term is pinned to the calibration speed, so the torque capacity
/// is constant and the vehicle can come to a full stop.
pub fn brake_torque(sprung_mass: f64, braking_distance: f64, disk_radius: f64, brake: f64) -> f64 {
    brake.clamp(0.0, 1.0)
        * brake_torque_capacity(sprung_mass, CALIBRATION_SPEED, braking_distance, disk_radius)
}
