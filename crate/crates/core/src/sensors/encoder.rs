use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    /// Pulses per revolution.
    pub ppr: u32,
    /// Cumulative gear ratio between encoder shaft and wheel.
    pub cgr: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig { ppr: 16, cgr: 120.0 }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ppr == 0 {
            return Err(Error::invalid("encoder.ppr", "must be >= 1"));
        }
        if !(self.cgr > 0.0) {
            return Err(Error::invalid("encoder.cgr", "must be > 0"));
        }
        Ok(())
    }
}

/// Tick count `⌊PPR·CGR·N_rev⌋`.
pub fn encoder_read(cfg: &EncoderConfig, revolutions: f64) -> i64 {
    (cfg.ppr as f64 * cfg.cgr * revolutions).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let cfg = EncoderConfig { ppr: 16, cgr: 120.0 };
        assert_eq!(encoder_read(&cfg, 0.0), 0);
        assert_eq!(encoder_read(&cfg, 2.5), 4800);
        assert_eq!(encoder_read(&EncoderConfig { ppr: 1, cgr: 1.0 }, 1.0), 1);
    }

    proptest! {
        #[test]
        fn monotone(a in 0.0f64..1e4, d in 0.0f64..10.0) {
            let cfg = EncoderConfig::default();
            prop_assert!(encoder_read(&cfg, a) <= encoder_read(&cfg, a + d));
        }
    }
}
