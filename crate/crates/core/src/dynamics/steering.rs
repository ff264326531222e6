use super::params::VehicleParams;

/// Left/right road-wheel angles for a virtual center angle `delta`.
///
/// The wheel on the inside of the turn gets the larger magnitude; `delta > 0`
/// turns left.
pub fn ackermann_angles(delta: f64, wheelbase: f64, track_width: f64) -> (f64, f64) {
    let t = delta.tan();
    let num = 2.0 * wheelbase * t;
    let left = (num / (2.0 * wheelbase - track_width * t)).atan();
    let right = (num / (2.0 * wheelbase + track_width * t)).atan();
    (left, right)
}

/// Maximum steering slew rate at speed `v`, rad/s.
pub fn steering_rate(v: f64, params: &VehicleParams) -> f64 {
    (params.steer_sensitivity + params.steer_speed_factor * (v.abs() / params.v_max)).abs()
}

/// Moves `delta` toward `command` no faster than [`steering_rate`] and clamps
/// the result to the steering limit.
pub fn apply_steering(delta: f64, command: f64, v: f64, params: &VehicleParams, dt: f64) -> f64 {
    let max_step = steering_rate(v, params) * dt;
    let diff = command - delta;
    let next = if diff.abs() <= max_step {
        command
    } else {
        delta + max_step.copysign(diff)
    };
    next.clamp(-params.max_steer, params.max_steer)
}
