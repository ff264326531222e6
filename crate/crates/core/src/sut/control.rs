use crate::dynamics::{ControlInput, Lights};

/// Proportional cruise gain, 1/(m/s).
pub const CRUISE_GAIN: f64 = 0.2;

const HIGH_BEAM_BELOW: f64 = 0.15;
const LOW_BEAM_BELOW: f64 = 0.5;

/// Full braking on trigger, otherwise proportional speed keeping on a
/// straight lane.
pub fn drive_controller(trigger: bool, speed: f64, target_speed: f64, gain: f64) -> ControlInput {
    if trigger {
        return ControlInput { throttle: 0.0, brake: 1.0, ..Default::default() };
    }
    let error = target_speed - speed;
    ControlInput {
        throttle: (gain * error).clamp(0.0, 1.0),
        brake: (-gain * error).clamp(0.0, 1.0),
        ..Default::default()
    }
}

pub fn lighting_policy(ambient_light: f64, fog_present: bool) -> Lights {
    if fog_present {
        Lights::Fog
    } else if ambient_light < HIGH_BEAM_BELOW {
        Lights::HighBeam
    } else if ambient_light < LOW_BEAM_BELOW {
        Lights::LowBeam
    } else {
        Lights::Off
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controller_examples() {
        let c = drive_controller(true, 10.0, 11.0, CRUISE_GAIN);
        assert_eq!((c.throttle, c.brake, c.steering), (0.0, 1.0, 0.0));
        let c = drive_controller(false, 11.0, 11.0, CRUISE_GAIN);
        assert_eq!((c.throttle, c.brake), (0.0, 0.0));
        let c = drive_controller(false, 0.0, 15.0, 0.2);
        assert_eq!((c.throttle, c.brake), (1.0, 0.0));
        let c = drive_controller(false, 13.0, 11.0, 0.2);
        assert!((c.brake - 0.4).abs() < 1e-12 && c.throttle == 0.0);
    }

    #[test]
    fn lighting_examples() {
        assert_eq!(lighting_policy(1.0, false), Lights::Off);
        assert_eq!(lighting_policy(1.0, true), Lights::Fog);
        assert_eq!(lighting_policy(0.0, true), Lights::Fog);
        assert_eq!(lighting_policy(0.05, false), Lights::HighBeam);
        assert_eq!(lighting_policy(0.3, false), Lights::LowBeam);
        assert_eq!(lighting_policy(0.5, false), Lights::Off);
    }
}
