use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::ResponseFit;
use super::phase::PhasePoint;
use crate::measurement::MeasurementRecord;
use crate::stats::Accumulator;
use crate::twa::Channel;
use crate::{Error, Result};

/// Largest single-phase uncertainty accepted before the sensitivity is
/// reported as divergent.
pub const MAX_PHASE_UNCERTAINTY: f64 = PI;

/// Standard-quantum-limit reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqlMode {
    /// One phase, all atoms: `1 / (2 sqrt N)`.
    Single,
    /// Both phases on every atom: `1 / sqrt(2 N)`.
    #[default]
    Joint,
    /// Joint reference with the ensemble split between the two phases;
    /// the reported gain is 3 dB higher than [`SqlMode::Joint`].
    Split,
}

/// SQL phase uncertainty for `n` atoms.
pub fn sql(n: f64, mode: SqlMode) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!(
            "SQL needs at least one atom, got {n}"
        )));
    }
    Ok(match mode {
        SqlMode::Single => 1.0 / (2.0 * n.sqrt()),
        SqlMode::Joint | SqlMode::Split => 1.0 / (2.0 * n).sqrt(),
    })
}

/// Joint metrological gain in dB against two single-phase SQL components.
pub fn gain(dphi1: f64, dphi2: f64, n: f64) -> Result<f64> {
    gain_with(dphi1, dphi2, n, SqlMode::Joint)
}

/// Gain against the chosen reference. `Single` compares the summed
/// variance to one SQL component only.
pub fn gain_with(dphi1: f64, dphi2: f64, n: f64, mode: SqlMode) -> Result<f64> {
    if !(dphi1 > 0.0 && dphi2 > 0.0 && dphi1.is_finite() && dphi2.is_finite()) {
        return Err(Error::Domain(format!(
            "phase uncertainties must be positive and finite, got ({dphi1}, {dphi2})"
        )));
    }
    let reference = sql(n, mode)?.powi(2);
    let zeta = -10.0 * ((dphi1 * dphi1 + dphi2 * dphi2) / reference).log10();
    Ok(match mode {
        SqlMode::Split => zeta + 10.0 * 2f64.log10(),
        _ => zeta,
    })
}

/// Error-propagation phase uncertainties along a ray `phi = alpha (cos Theta, sin Theta)`.
///
/// The fit is against `alpha`; `d<Q_yz>/d phi1 = (d<Q_yz>/d alpha) / cos Theta`
/// and likewise for `Q_xz` with `sin Theta`.
pub fn sensitivity(fit: &ResponseFit, p: PhasePoint, theta: f64) -> Result<(f64, f64)> {
    let alpha = p.phi1 * theta.cos() + p.phi2 * theta.sin();
    if !fit.covers(alpha) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} outside fitted domain [{}, {}]",
            fit.domain.0, fit.domain.1
        )));
    }
    let projections = [theta.cos(), theta.sin()];
    let mut out = [0.0; 2];
    for (k, ch) in Channel::BOTH.into_iter().enumerate() {
        let c = fit.channel(ch);
        let slope = c.mean_slope(alpha).abs();
        let proj = projections[k].abs();
        let dphi = c.std_at(alpha) * proj / slope;
        if !(dphi.is_finite() && dphi > 0.0 && dphi <= MAX_PHASE_UNCERTAINTY) || proj < 1e-9 {
            return Err(Error::DivergentSensitivity(format!(
                "{} slope {slope:e} along Theta = {theta} at alpha = {alpha} gives dphi = {dphi:e}",
                ch.name()
            )));
        }
        out[k] = dphi;
    }
    Ok((out[0], out[1]))
}

/// Sensitivity and gain at one phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub phi1: f64,
    pub phi2: f64,
    pub dphi1: f64,
    pub dphi2: f64,
    pub sql1: f64,
    pub sql2: f64,
    pub gain_db: f64,
    pub sql_mode: SqlMode,
    pub n_atoms: f64,
    pub shots: u64,
}

impl GainResult {
    pub fn evaluate(
        fit: &ResponseFit,
        p: PhasePoint,
        theta: f64,
        n: f64,
        mode: SqlMode,
        shots: u64,
    ) -> Result<Self> {
        let (dphi1, dphi2) = sensitivity(fit, p, theta)?;
        let single = sql(n, SqlMode::Single)?;
        Ok(GainResult {
            phi1: p.phi1,
            phi2: p.phi2,
            dphi1,
            dphi2,
            sql1: single,
            sql2: single,
            gain_db: gain_with(dphi1, dphi2, n, mode)?,
            sql_mode: mode,
            n_atoms: n,
            shots,
        })
    }
}

/// Center and radius of a shot cloud in the `(Q_yz, Q_xz) / N` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub center_yz: f64,
    pub center_xz: f64,
    pub radius: f64,
}

pub fn scatter_summary(shots: &[MeasurementRecord], n: f64) -> Result<Scatter> {
    if shots.len() < 2 {
        return Err(Error::Statistics(format!(
            "scatter needs at least 2 shots, got {}",
            shots.len()
        )));
    }
    let yz: Accumulator = shots.iter().map(|s| s.q_yz).collect();
    let xz: Accumulator = shots.iter().map(|s| s.q_xz).collect();
    Ok(Scatter {
        center_yz: yz.mean() / n,
        center_xz: xz.mean() / n,
        radius: 3f64.sqrt() * (yz.variance() + xz.variance()).sqrt() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fit::{fit_response, SweepSample};
    use super::*;
    use crate::measurement::{measure, NoiseConfig};
    use crate::rng::seed_derive;
    use crate::twa::sample_initial;

    #[test]
    fn sql_values() {
        let s = sql(26_000.0, SqlMode::Single).unwrap();
        let j = sql(26_000.0, SqlMode::Joint).unwrap();
        assert_eq!(s, 1.0 / (2.0 * 26_000f64.sqrt()));
        assert_eq!(j, 1.0 / 52_000f64.sqrt());
        assert!((s - 3.101e-3).abs() < 5e-7);
        assert!((j - 4.385e-3).abs() < 5e-7);
        for n in [1.0, 7.0, 1e4] {
            let r = sql(n, SqlMode::Joint).unwrap() / sql(n, SqlMode::Single).unwrap();
            assert!((r - 2f64.sqrt()).abs() < 1e-15);
        }
        assert!(sql(0.5, SqlMode::Single).is_err());
    }

    #[test]
    fn gain_arithmetic() {
        let n = 26_000.0;
        let s = sql(n, SqlMode::Single).unwrap();
        assert_eq!(gain(s, s, n).unwrap(), 0.0);
        assert!((gain(s / 2.0, s / 2.0, n).unwrap() - 6.0206).abs() < 1e-4);
        assert!((gain_with(s, s, n, SqlMode::Split).unwrap() - 3.0103).abs() < 1e-4);
        assert!(gain(0.0, s, n).is_err());
    }

    /// Sweep along `Theta` with `<Q_yz> = 2 N phi1` and `<Q_xz> = sign 2 N phi2`.
    fn linear_sweep(n: f64, sigma: f64, theta: f64, sign_xz: f64) -> ResponseFit {
        let samples: Vec<_> = (0..11)
            .map(|k| {
                let x = -0.05 * PI + 0.01 * PI * k as f64;
                SweepSample {
                    x,
                    shots: 100,
                    mean_yz: 2.0 * n * x * theta.cos(),
                    std_yz: sigma,
                    mean_xz: sign_xz * 2.0 * n * x * theta.sin(),
                    std_xz: sigma,
                }
            })
            .collect();
        fit_response(&samples).unwrap()
    }

    #[test]
    fn shot_noise_slope_gives_single_sql() {
        let n = 26_000.0;
        let theta = 3.0 * PI / 8.0;
        let fit = linear_sweep(n, n.sqrt(), theta, 1.0);
        let (d1, d2) = sensitivity(&fit, PhasePoint::from_polar(0.02, theta), theta).unwrap();
        let expect = 1.0 / (2.0 * n.sqrt());
        assert!((d1 / expect - 1.0).abs() < 1e-6);
        assert!((d2 / expect - 1.0).abs() < 1e-6);
        let half = linear_sweep(n, 0.5 * n.sqrt(), theta, -1.0);
        let (h1, h2) = sensitivity(&half, PhasePoint::from_polar(0.02, theta), theta).unwrap();
        assert!((h1 / d1 - 0.5).abs() < 1e-6 && (h2 / d2 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn flat_response_is_divergent() {
        let theta = PI / 8.0;
        let fit = linear_sweep(0.0, 1.0, theta, 1.0);
        assert!(matches!(
            sensitivity(&fit, PhasePoint::from_polar(0.01, theta), theta),
            Err(Error::DivergentSensitivity(_))
        ));
        let fit = linear_sweep(100.0, 1.0, theta, 1.0);
        assert!(matches!(
            sensitivity(&fit, PhasePoint::from_polar(0.5, theta), theta),
            Err(Error::Domain(_))
        ));
    }

    fn record(q_yz: f64, q_xz: f64) -> MeasurementRecord {
        MeasurementRecord {
            shot: 0,
            n_out_2m1: 0.0,
            n_out_1m1: 0.0,
            n_out_2p1: 0.0,
            n_out_1p1: 0.0,
            n_residual: 0.0,
            q_yz,
            q_xz,
        }
    }

    #[test]
    fn scatter_edges() {
        let shots = vec![record(3.0, -1.0); 5];
        let s = scatter_summary(&shots, 10.0).unwrap();
        assert_eq!(s.radius, 0.0);
        assert!((s.center_yz - 0.3).abs() < 1e-15 && (s.center_xz + 0.1).abs() < 1e-15);
        assert!(scatter_summary(&shots[..1], 10.0).is_err());
    }

    #[test]
    fn polar_scatter_radius() {
        let n = 4000u64;
        let noise = NoiseConfig::ideal();
        let mut rng = seed_derive(5, "scatter", 0).rng();
        let shots: Vec<_> = (0..20_000)
            .map(|k| {
                let psi = sample_initial(n as f64, &mut rng);
                measure(&psi, &noise, k, &mut rng)
            })
            .collect();
        let s = scatter_summary(&shots, n as f64).unwrap();
        let expect = 6f64.sqrt() / (n as f64).sqrt();
        assert!(
            (s.radius / expect - 1.0).abs() < 0.02,
            "{} vs {expect}",
            s.radius
        );
    }
}
