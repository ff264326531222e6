use super::params::VehicleParams;

/// Which drag level applies. Cases are checked in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeroCase {
    Max,
    Idle,
    Reverse,
    Run,
}

/// Speeds compare by magnitude so that the reverse case can fire while
/// travelling backwards.
pub fn aero_case(
    velocity: f64,
    output_torque: f64,
    gear: i32,
    mean_wheel_rpm: f64,
    params: &VehicleParams,
) -> AeroCase {
    let speed = velocity.abs();
    if speed >= params.v_max {
        AeroCase::Max
    } else if output_torque == 0.0 {
        AeroCase::Idle
    } else if speed >= params.v_rev && gear == -1 && mean_wheel_rpm < 0.0 {
        AeroCase::Reverse
    } else {
        AeroCase::Run
    }
}

pub fn aero_drag_magnitude(case: AeroCase, params: &VehicleParams) -> f64 {
    match case {
        AeroCase::Max => params.drag.max,
        AeroCase::Idle => params.drag.idle,
        AeroCase::Reverse => params.drag.rev,
        AeroCase::Run => params.drag.run,
    }
}

/// Below this speed the drag direction ramps linearly to zero.
pub const DRAG_RAMP_SPEED: f64 = 0.1;

/// Signed drag along the body x axis, opposing `velocity`.
pub fn aero_drag(
    velocity: f64,
    output_torque: f64,
    gear: i32,
    mean_wheel_rpm: f64,
    params: &VehicleParams,
) -> f64 {
    let case = aero_case(velocity, output_torque, gear, mean_wheel_rpm, params);
    let direction = (velocity / DRAG_RAMP_SPEED).clamp(-1.0, 1.0);
    -direction * aero_drag_magnitude(case, params)
}
