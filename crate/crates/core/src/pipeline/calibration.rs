use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrology::{encode_phases, PhasePoint};
use crate::rng::{normal, seed_derive};
use crate::stats::Accumulator;
use crate::twa::sample_initial;
use crate::{Error, Result};

/// Number-difference noise of the equal `|+1>, |-1>` superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectCalibRow {
    pub n_atoms: u64,
    pub std_diff: f64,
    pub std_stderr: f64,
    pub sqrt_n: f64,
}

/// Prepares `(|+1> + |-1>)/sqrt 2` per atom with an RF pi/2 pulse on the
/// polar state and records `N_+1 - N_-1` with detection noise `sigma_det`
/// on each population. The expected spread is `sqrt(N + 2 sigma_det^2)`.
pub fn detect_calib(
    n_values: &[u64],
    shots: u64,
    sigma_det: f64,
    seed: u64,
    label: &str,
) -> Result<Vec<DetectCalibRow>> {
    if shots < 2 {
        return Err(Error::Config("detect-calib needs at least 2 shots".into()));
    }
    n_values
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            if n == 0 {
                return Err(Error::Config("atom numbers must be positive".into()));
            }
            let diffs: Vec<f64> = (0..shots)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seed_derive(seed, &format!("{label}/n{k}"), i).rng();
                    let psi = encode_phases(
                        &sample_initial(n as f64, &mut rng),
                        PhasePoint::new(FRAC_PI_2, 0.0),
                    );
                    let plus = psi.plus.norm_sqr() + sigma_det * normal(&mut rng);
                    let minus = psi.minus.norm_sqr() + sigma_det * normal(&mut rng);
                    plus - minus
                })
                .collect();
            let acc: Accumulator = diffs.into_iter().collect();
            let std = acc.std_dev();
            Ok(DetectCalibRow {
                n_atoms: n,
                std_diff: std,
                std_stderr: std / (2.0 * (shots - 1) as f64).sqrt(),
                sqrt_n: (n as f64).sqrt(),
            })
        })
        .collect()
}

/// Mean `m = 0` fraction after a small RF rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfCalibRow {
    pub alpha: f64,
    pub n0_fraction: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::Fit(format!(
            "linear fit needs at least 3 matched points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("linear fit needs distinct x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: (rss / (nf - 2.0) / sxx).sqrt(),
    })
}

/// Prepares `(-i|+1> + sqrt2 |0> - i|-1>)/2` per atom (an RF rotation by
/// pi/4 from the polar state), rotates back by `alpha` about the same axis
/// and records the corrected `m = 0` fraction, which follows
/// `(1 + sin 2 alpha)/2`.
pub fn rf_calib(
    n: u64,
    alphas: &[f64],
    shots: u64,
    seed: u64,
    label: &str,
) -> Result<(Vec<RfCalibRow>, LinearFit)> {
    if n == 0 || shots < 2 {
        return Err(Error::Config(
            "rf-calib needs a positive atom number and at least 2 shots".into(),
        ));
    }
    let rows: Vec<RfCalibRow> = alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let fractions: Vec<f64> = (0..shots)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seed_derive(seed, &format!("{label}/alpha{k}"), i).rng();
                    let probe = encode_phases(
                        &sample_initial(n as f64, &mut rng),
                        PhasePoint::new(FRAC_PI_4, 0.0),
                    );
                    let psi = encode_phases(&probe, PhasePoint::new(-alpha, 0.0));
                    (psi.zero.norm_sqr() - 0.5) / n as f64
                })
                .collect();
            let acc: Accumulator = fractions.into_iter().collect();
            RfCalibRow {
                alpha,
                n0_fraction: acc.mean(),
                stderr: acc.summary().mean_stderr,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.n0_fraction).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok((rows, fit))
}
