use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Correlation of the two pump-phase errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseNoise {
    /// `theta_1` and `theta_2` drawn independently.
    Independent,
    /// One draw shared by both pumps.
    CommonMode,
}

/// Technical noise channels and pump splitting of the readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Signal-pump crosstalk scale (sqrt(atoms)): `<|eta|^2> = delta_eta^2`,
    /// real and imaginary parts independent.
    pub delta_eta: f64,
    /// Standard deviation of each pump phase error (rad).
    pub delta_theta: f64,
    pub phase_noise: PhaseNoise,
    /// Detection noise on each population difference (atoms).
    pub sigma_det: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Atoms left behind in `|1,0>` by an imperfect split. Only a residual
    /// larger than the `1 - eps1^2 - eps2^2` share has an effect: it shrinks
    /// both pumps while readout still divides by the nominal `eps`.
    pub residual_pump: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::ideal()
    }
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        NoiseConfig {
            delta_eta: 0.0,
            delta_theta: 0.0,
            phase_noise: PhaseNoise::Independent,
            sigma_det: 0.0,
            eps1: FRAC_1_SQRT_2,
            eps2: FRAC_1_SQRT_2,
            residual_pump: 0.0,
        }
    }

    /// The operating point matched to the experimental calibrations.
    pub fn calibrated() -> Self {
        NoiseConfig {
            delta_eta: 0.3,
            delta_theta: 0.0075 * 2.0 * PI,
            sigma_det: 24.0,
            ..NoiseConfig::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_eta", self.delta_eta),
            ("delta_theta", self.delta_theta),
            ("sigma_det", self.sigma_det),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("residual_pump", self.residual_pump),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.eps1 * self.eps1 + self.eps2 * self.eps2 > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "eps1^2 + eps2^2 = {} exceeds 1",
                self.eps1 * self.eps1 + self.eps2 * self.eps2
            )));
        }
        if self.eps1 == 0.0 || self.eps2 == 0.0 {
            return Err(Error::Config(
                "pump splitting amplitudes must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Pump amplitudes actually realized for a pump holding `n0` atoms.
    pub fn effective_eps(&self, n0: f64) -> (f64, f64) {
        let share = self.eps1 * self.eps1 + self.eps2 * self.eps2;
        if n0 <= 0.0 || self.residual_pump <= (1.0 - share) * n0 {
            return (self.eps1, self.eps2);
        }
        let kept = (1.0 - self.residual_pump / n0).max(0.0);
        let s = (kept / share).sqrt();
        (self.eps1 * s, self.eps2 * s)
    }
}
