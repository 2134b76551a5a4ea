use alloc::format;

use serde::{Deserialize, Serialize};

use crate::sim::EnvironmentSpec;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    /// Time of flight per station.
    Tof,
    /// Time difference of arrival to the earliest station.
    Tdoa,
}

/// Radio front-end parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    /// Hz. The pulse is `sin(B t) / (B t)`.
    pub bandwidth: f64,
    /// Hz, at least twice the bandwidth.
    pub sample_rate: f64,
    /// CIR window length in samples.
    pub cir_length: usize,
    pub max_reflection_order: usize,
    /// Std of the circular complex noise added to every CIR sample.
    pub noise_std: f64,
    pub mode: MeasurementMode,
    /// Std of the additive Gaussian ToA error, seconds.
    pub toa_noise_std: f64,
    /// Amplitude factor applied per reflection.
    pub reflection_loss: f64,
    /// Samples kept before the first path in a stored CIR window.
    pub lead_samples: usize,
    /// Scale every stored CIR to unit peak magnitude (receiver AGC).
    pub normalize_peak: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth: 500e6,
            sample_rate: 1e9,
            cir_length: 128,
            max_reflection_order: 2,
            noise_std: 0.005,
            mode: MeasurementMode::Tof,
            toa_noise_std: 1e-9,
            reflection_loss: 0.7,
            lead_samples: 8,
            normalize_peak: true,
        }
    }
}

impl RadioConfig {
    /// Noise-free variant: no CIR noise and no ToA noise.
    pub fn noiseless(mut self) -> Self {
        self.noise_std = 0.0;
        self.toa_noise_std = 0.0;
        self
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Distance light travels in one sample, meters.
    pub fn sample_distance(&self) -> f64 {
        SPEED_OF_LIGHT / self.sample_rate
    }

    pub fn validate(&self, env: &EnvironmentSpec) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::InvalidRadio(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if !(self.sample_rate >= 2.0 * self.bandwidth) || !self.sample_rate.is_finite() {
            return Err(Error::InvalidRadio(format!(
                "sample rate {} Hz is below twice the bandwidth {} Hz",
                self.sample_rate, self.bandwidth
            )));
        }
        let span = self.cir_length as f64 * self.sample_distance();
        if !(span > env.bounds.diagonal()) {
            return Err(Error::InvalidRadio(format!(
                "CIR window covers {span:.2} m, less than the environment diagonal {:.2} m",
                env.bounds.diagonal()
            )));
        }
        if self.lead_samples >= self.cir_length {
            return Err(Error::InvalidRadio("lead_samples must be smaller than cir_length".into()));
        }
        if !(self.noise_std >= 0.0 && self.toa_noise_std >= 0.0) {
            return Err(Error::InvalidRadio("noise levels must be nonnegative".into()));
        }
        if !(self.reflection_loss > 0.0 && self.reflection_loss <= 1.0) {
            return Err(Error::InvalidRadio(format!("reflection loss {} not in (0, 1]", self.reflection_loss)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fits_hall() {
        RadioConfig::default().validate(&EnvironmentSpec::industrial_hall()).unwrap();
    }

    #[test]
    fn rejects_undersampling_and_short_windows() {
        let env = EnvironmentSpec::industrial_hall();
        let r = RadioConfig { sample_rate: 0.9e9, ..Default::default() };
        assert!(r.validate(&env).is_err());
        let r = RadioConfig { cir_length: 90, ..Default::default() };
        assert!(r.validate(&env).is_err());
        let r = RadioConfig { bandwidth: 0.0, ..Default::default() };
        assert!(r.validate(&env).is_err());
    }
}
