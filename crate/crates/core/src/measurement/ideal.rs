use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::levels::{ExtendedAmplitudes, Level};
use super::noise::{NoiseConfig, PhaseNoise};
use crate::rng::{complex_normal, normal};
use crate::twa::ModeAmplitudes;
use crate::C64;

/// Symmetric and antisymmetric signal modes `(psi_+1 +- psi_-1)/sqrt2`.
pub fn split_signal(psi: &ModeAmplitudes) -> (C64, C64) {
    (
        (psi.plus + psi.minus) * FRAC_1_SQRT_2,
        (psi.plus - psi.minus) * FRAC_1_SQRT_2,
    )
}

/// Splits the `m = 0` pump into `i eps1 e^{i theta1} psi_0` and
/// `eps2 e^{i theta2} psi_0`; the remainder stays in `|1,0>`.
///
/// Two phase errors are always drawn so that the random stream does not
/// depend on the noise settings.
pub fn split_pump<R: Rng + ?Sized>(psi0: C64, noise: &NoiseConfig, rng: &mut R) -> (C64, C64, C64) {
    let u1 = normal(rng);
    let u2 = normal(rng);
    let (theta1, theta2) = match noise.phase_noise {
        PhaseNoise::Independent => (noise.delta_theta * u1, noise.delta_theta * u2),
        PhaseNoise::CommonMode => (noise.delta_theta * u1, noise.delta_theta * u1),
    };
    let (e1, e2) = noise.effective_eps(psi0.norm_sqr());
    let pump1 = C64::new(0.0, e1) * C64::from_polar(1.0, theta1) * psi0;
    let pump2 = e2 * C64::from_polar(1.0, theta2) * psi0;
    let left = 1.0 - e1 * e1 - e2 * e2;
    let residual = if left > 1e-12 {
        left.sqrt() * psi0
    } else {
        C64::new(0.0, 0.0)
    };
    (pump1, pump2, residual)
}

/// Adds independent complex crosstalk noise with `<|eta|^2> = delta_eta^2`
/// to both signal modes.
pub fn add_crosstalk<R: Rng + ?Sized>(
    a_s: C64,
    a_a: C64,
    noise: &NoiseConfig,
    rng: &mut R,
) -> (C64, C64) {
    let s = noise.delta_eta * FRAC_1_SQRT_2;
    let eta_s = complex_normal(rng, s);
    let eta_a = complex_normal(rng, s);
    (a_s + eta_s, a_a + eta_a)
}

/// Homodyne mixing of each signal with its pump into the detected F = 2 levels.
/// `(1,0)` keeps `residual`; the ancilla `(2,0)` and F = 1 side levels end empty.
pub fn homodyne_outputs(
    a_s: C64,
    a_a: C64,
    pump1: C64,
    pump2: C64,
    residual: C64,
) -> ExtendedAmplitudes {
    let i = C64::new(0.0, 1.0);
    let mut out = ExtendedAmplitudes::zero();
    out.set(Level::new(2, -2), (a_s + pump1) * FRAC_1_SQRT_2);
    out.set(Level::new(2, -1), i * (a_s - pump1) * FRAC_1_SQRT_2);
    out.set(Level::new(2, 2), (a_a - pump2) * FRAC_1_SQRT_2);
    out.set(Level::new(2, 1), (a_a + pump2) * FRAC_1_SQRT_2);
    out.set(Level::new(1, 0), residual);
    out
}

/// One single-shot readout. `n_out_1m1` and `n_out_1p1` are the former
/// `(1,-1)` and `(1,+1)` signal atoms, which the last pulses park in `(2,-2)`
/// and `(2,+2)` for imaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub shot: u64,
    pub n_out_2m1: f64,
    pub n_out_1m1: f64,
    pub n_out_2p1: f64,
    pub n_out_1p1: f64,
    pub n_residual: f64,
    /// `Q_yz` estimate in atoms.
    pub q_yz: f64,
    /// `Q_xz` estimate in atoms.
    pub q_xz: f64,
}

/// Population differences with detection noise, rescaled by the nominal
/// pump amplitudes. Populations are the Weyl-symbol values of the trajectory.
pub fn readout<R: Rng + ?Sized>(
    out: &ExtendedAmplitudes,
    noise: &NoiseConfig,
    shot: u64,
    rng: &mut R,
) -> MeasurementRecord {
    let n_out_2m1 = out.population(Level::new(2, -1));
    let n_out_1m1 = out.population(Level::new(2, -2));
    let n_out_2p1 = out.population(Level::new(2, 1));
    let n_out_1p1 = out.population(Level::new(2, 2));
    let d_yz = n_out_2m1 - n_out_1m1 + noise.sigma_det * normal(rng);
    let d_xz = n_out_2p1 - n_out_1p1 + noise.sigma_det * normal(rng);
    MeasurementRecord {
        shot,
        n_out_2m1,
        n_out_1m1,
        n_out_2p1,
        n_out_1p1,
        n_residual: out.population(Level::new(1, 0)),
        q_yz: d_yz / noise.eps1,
        q_xz: d_xz / noise.eps2,
    }
}

/// Full ideal-layer measurement: signal/pump split, crosstalk, homodyne
/// mixing and noisy readout. Draw order: pump phases, crosstalk, detection.
pub fn measure<R: Rng + ?Sized>(
    psi: &ModeAmplitudes,
    noise: &NoiseConfig,
    shot: u64,
    rng: &mut R,
) -> MeasurementRecord {
    let (a_s, a_a) = split_signal(psi);
    let (pump1, pump2, residual) = split_pump(psi.zero, noise, rng);
    let (a_s, a_a) = add_crosstalk(a_s, a_a, noise, rng);
    readout(
        &homodyne_outputs(a_s, a_a, pump1, pump2, residual),
        noise,
        shot,
        rng,
    )
}
