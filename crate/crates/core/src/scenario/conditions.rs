use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeOfDay {
    #[serde(rename = "5am")]
    Am5,
    #[serde(rename = "7am")]
    Am7,
    #[serde(rename = "9am")]
    Am9,
    #[serde(rename = "11am")]
    Am11,
    #[serde(rename = "1pm")]
    Pm1,
    #[serde(rename = "3pm")]
    Pm3,
    #[serde(rename = "5pm")]
    Pm5,
    #[serde(rename = "7pm")]
    Pm7,
}

impl TimeOfDay {
    pub const ALL: [TimeOfDay; 8] = [
        TimeOfDay::Am5,
        TimeOfDay::Am7,
        TimeOfDay::Am9,
        TimeOfDay::Am11,
        TimeOfDay::Pm1,
        TimeOfDay::Pm3,
        TimeOfDay::Pm5,
        TimeOfDay::Pm7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeOfDay::Am5 => "5am",
            TimeOfDay::Am7 => "7am",
            TimeOfDay::Am9 => "9am",
            TimeOfDay::Am11 => "11am",
            TimeOfDay::Pm1 => "1pm",
            TimeOfDay::Pm3 => "3pm",
            TimeOfDay::Pm5 => "5pm",
            TimeOfDay::Pm7 => "7pm",
        }
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeOfDay {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TimeOfDay::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown time of day `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weather {
    Clear,
    Cloudy,
    LightFog,
    HeavyFog,
    LightRain,
    HeavyRain,
    LightSnow,
    HeavySnow,
}

impl Weather {
    pub const ALL: [Weather; 8] = [
        Weather::Clear,
        Weather::Cloudy,
        Weather::LightFog,
        Weather::HeavyFog,
        Weather::LightRain,
        Weather::HeavyRain,
        Weather::LightSnow,
        Weather::HeavySnow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Clear => "clear",
            Weather::Cloudy => "cloudy",
            Weather::LightFog => "light_fog",
            Weather::HeavyFog => "heavy_fog",
            Weather::LightRain => "light_rain",
            Weather::HeavyRain => "heavy_rain",
            Weather::LightSnow => "light_snow",
            Weather::HeavySnow => "heavy_snow",
        }
    }

    /// Fog, mist, or heavy precipitation.
    pub fn fog_present(self) -> bool {
        matches!(
            self,
            Weather::LightFog | Weather::HeavyFog | Weather::HeavyRain | Weather::HeavySnow
        )
    }
}

impl fmt::Display for Weather {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weather {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Weather::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown weather `{s}`")))
    }
}

/// One value per weather kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherTable {
    pub clear: f64,
    pub cloudy: f64,
    pub light_fog: f64,
    pub heavy_fog: f64,
    pub light_rain: f64,
    pub heavy_rain: f64,
    pub light_snow: f64,
    pub heavy_snow: f64,
}

impl WeatherTable {
    pub fn get(&self, w: Weather) -> f64 {
        match w {
            Weather::Clear => self.clear,
            Weather::Cloudy => self.cloudy,
            Weather::LightFog => self.light_fog,
            Weather::HeavyFog => self.heavy_fog,
            Weather::LightRain => self.light_rain,
            Weather::HeavyRain => self.heavy_rain,
            Weather::LightSnow => self.light_snow,
            Weather::HeavySnow => self.heavy_snow,
        }
    }
}

/// One value per time of day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeTable {
    #[serde(rename = "5am")]
    pub am5: f64,
    #[serde(rename = "7am")]
    pub am7: f64,
    #[serde(rename = "9am")]
    pub am9: f64,
    #[serde(rename = "11am")]
    pub am11: f64,
    #[serde(rename = "1pm")]
    pub pm1: f64,
    #[serde(rename = "3pm")]
    pub pm3: f64,
    #[serde(rename = "5pm")]
    pub pm5: f64,
    #[serde(rename = "7pm")]
    pub pm7: f64,
}

impl TimeTable {
    pub fn get(&self, t: TimeOfDay) -> f64 {
        match t {
            TimeOfDay::Am5 => self.am5,
            TimeOfDay::Am7 => self.am7,
            TimeOfDay::Am9 => self.am9,
            TimeOfDay::Am11 => self.am11,
            TimeOfDay::Pm1 => self.pm1,
            TimeOfDay::Pm3 => self.pm3,
            TimeOfDay::Pm5 => self.pm5,
            TimeOfDay::Pm7 => self.pm7,
        }
    }
}

/// Lookup tables behind [`derive_conditions`]. Each table may be replaced
/// as a whole from the campaign config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionTables {
    /// Daylight by sun elevation, 0..1.
    pub sun_light: TimeTable,
    /// Light transmitted through the weather, 0..1.
    pub attenuation: WeatherTable,
    /// Meteorological visibility, m.
    pub visibility: WeatherTable,
    /// Tire friction multiplier, (0, 1].
    pub traction: WeatherTable,
}

impl Default for ConditionTables {
    fn default() -> Self {
        ConditionTables {
            sun_light: TimeTable {
                am5: 0.05,
                am7: 0.3,
                am9: 0.7,
                am11: 0.95,
                pm1: 1.0,
                pm3: 0.9,
                pm5: 0.6,
                pm7: 0.2,
            },
            attenuation: WeatherTable {
                clear: 1.0,
                cloudy: 0.7,
                light_fog: 0.5,
                heavy_fog: 0.5,
                light_rain: 0.6,
                heavy_rain: 0.6,
                light_snow: 0.65,
                heavy_snow: 0.65,
            },
            visibility: WeatherTable {
                clear: 10_000.0,
                cloudy: 8_000.0,
                light_fog: 200.0,
                heavy_fog: 50.0,
                light_rain: 1_000.0,
                heavy_rain: 300.0,
                light_snow: 800.0,
                heavy_snow: 250.0,
            },
            traction: WeatherTable {
                clear: 1.0,
                cloudy: 1.0,
                light_fog: 1.0,
                heavy_fog: 1.0,
                light_rain: 0.8,
                heavy_rain: 0.6,
                light_snow: 0.55,
                heavy_snow: 0.4,
            },
        }
    }
}

impl ConditionTables {
    pub fn validate(&self) -> Result<()> {
        for w in Weather::ALL {
            let t = self.traction.get(w);
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(format!("traction.{w}"), "must be in (0, 1]"));
            }
            if !(self.visibility.get(w) > 0.0) {
                return Err(Error::invalid(format!("visibility.{w}"), "must be > 0"));
            }
            if !(0.0..=1.0).contains(&self.attenuation.get(w)) {
                return Err(Error::invalid(format!("attenuation.{w}"), "must be in [0, 1]"));
            }
        }
        for t in TimeOfDay::ALL {
            if !(0.0..=1.0).contains(&self.sun_light.get(t)) {
                return Err(Error::invalid(format!("sun_light.{t}"), "must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub time_of_day: TimeOfDay,
    pub weather: Weather,
    pub ambient_light: f64,
    pub visibility: f64,
    pub traction_scale: f64,
    pub fog_present: bool,
}

impl Default for Conditions {
    fn default() -> Self {
        derive_conditions(TimeOfDay::Pm1, Weather::Clear, &ConditionTables::default())
    }
}

pub fn derive_conditions(time_of_day: TimeOfDay, weather: Weather, tables: &ConditionTables) -> Conditions {
    Conditions {
        time_of_day,
        weather,
        ambient_light: (tables.sun_light.get(time_of_day) * tables.attenuation.get(weather)).clamp(0.0, 1.0),
        visibility: tables.visibility.get(weather),
        traction_scale: tables.traction.get(weather),
        fog_present: weather.fog_present(),
    }
}
