use rand::Rng;

use super::ideal::split_signal;
use crate::rng::complex_normal;
use crate::twa::ModeAmplitudes;
use crate::{Error, Result};

/// Readout in which each signal mode first passes a 50/50 beam splitter with
/// an empty (vacuum) level, as in transferring half of `|1,+-1>` into an
/// unpopulated F = 2 level. Returns `(Q_yz, Q_xz)` estimates whose variance
/// is `(signal variance + N)/2`, so the detectable squeezing cannot exceed 3 dB.
pub fn kunkel_measure<R: Rng + ?Sized>(psi: &ModeAmplitudes, rng: &mut R) -> (f64, f64) {
    let (a_s, a_a) = split_signal(psi);
    // Vacuum Wigner samples: variance 1/4 per quadrature.
    let v_s = complex_normal(rng, 0.5);
    let v_a = complex_normal(rng, 0.5);
    let a_s = (a_s + v_s) * std::f64::consts::FRAC_1_SQRT_2;
    let a_a = (a_a + v_a) * std::f64::consts::FRAC_1_SQRT_2;
    let z = psi.zero.conj();
    (-2.0 * (z * a_s).im, 2.0 * (z * a_a).re)
}

/// `xi^2 = 20 log10(dQ / sqrt(N))` in dB.
pub fn squeezing_parameter(delta_q: f64, n_atoms: f64) -> Result<f64> {
    if !(delta_q > 0.0 && n_atoms > 0.0) {
        return Err(Error::Domain(format!(
            "squeezing parameter needs positive spread and atom number, got {delta_q} and {n_atoms}"
        )));
    }
    Ok(20.0 * (delta_q / n_atoms.sqrt()).log10())
}
