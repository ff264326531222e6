use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian measurement noise with a constant bias.
///
/// With `compensate_bias` set, the bias is subtracted again and only the
/// zero-mean part remains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub enabled: bool,
    pub seed: u64,
    pub std_dev: f64,
    pub bias: f64,
    pub compensate_bias: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            enabled: false,
            seed: 0,
            std_dev: 0.0,
            bias: 0.0,
            compensate_bias: false,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.std_dev >= 0.0 && self.std_dev.is_finite()) {
            return Err(Error::invalid("noise.std_dev", "must be a finite value >= 0"));
        }
        Ok(())
    }
}

/// Seeded sample stream for one [`NoiseModel`].
#[derive(Debug, Clone)]
pub struct NoiseSource {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(model: NoiseModel) -> Self {
        NoiseSource {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
        }
    }

    /// Disabled source; every sample is exactly zero.
    pub fn off() -> Self {
        NoiseSource::new(NoiseModel::default())
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Additive error for one channel reading.
    pub fn sample(&mut self) -> f64 {
        if !self.model.enabled {
            return 0.0;
        }
        let bias = if self.model.compensate_bias { 0.0 } else { self.model.bias };
        let gauss = if self.model.std_dev > 0.0 {
            Normal::new(0.0, self.model.std_dev)
                .map(|n| n.sample(&mut self.rng))
                .unwrap_or(0.0)
        } else {
            0.0
        };
        bias + gauss
    }
}
