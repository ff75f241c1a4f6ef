use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::twa::Channel;
use crate::{Error, Result};

/// Minimum number of distinct sweep values for a response fit.
pub const MIN_SWEEP_POINTS: usize = 6;
/// Minimum shots per sweep value.
pub const MIN_SHOTS: u64 = 2;

/// Measured statistics of both channels at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub x: f64,
    pub shots: u64,
    pub mean_yz: f64,
    pub std_yz: f64,
    pub mean_xz: f64,
    pub std_xz: f64,
}

/// Quartic mean curve and linear-free quartic spread curve of one channel.
/// Coefficients are in ascending powers of the sweep variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFit {
    pub mean: [f64; 5],
    /// `std[1]` is always zero.
    pub std: [f64; 5],
    pub mean_rms_residual: f64,
    pub std_rms_residual: f64,
}

impl ChannelFit {
    pub fn mean_at(&self, x: f64) -> f64 {
        horner(&self.mean, x)
    }

    pub fn mean_slope(&self, x: f64) -> f64 {
        let c = &self.mean;
        c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * 4.0 * c[4]))
    }

    pub fn std_at(&self, x: f64) -> f64 {
        horner(&self.std, x)
    }
}

fn horner(c: &[f64; 5], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Response curves of both channels against one sweep parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseFit {
    pub yz: ChannelFit,
    pub xz: ChannelFit,
    pub domain: (f64, f64),
}

impl ResponseFit {
    pub fn channel(&self, ch: Channel) -> &ChannelFit {
        match ch {
            Channel::Yz => &self.yz,
            Channel::Xz => &self.xz,
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        let pad = 1e-9 * (self.domain.1 - self.domain.0).abs().max(1e-300);
        x >= self.domain.0 - pad && x <= self.domain.1 + pad
    }
}

/// Least-squares fits of the mean (full quartic) and standard deviation
/// (quartic without linear term) of each channel.
pub fn fit_response(samples: &[SweepSample]) -> Result<ResponseFit> {
    let mut xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < MIN_SWEEP_POINTS {
        return Err(Error::Fit(format!(
            "{} distinct sweep values, at least {MIN_SWEEP_POINTS} required",
            xs.len()
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.shots < MIN_SHOTS) {
        return Err(Error::Fit(format!(
            "sweep value {} has {} shots, at least {MIN_SHOTS} required",
            s.x, s.shots
        )));
    }
    if samples.iter().any(|s| {
        ![s.x, s.mean_yz, s.std_yz, s.mean_xz, s.std_xz]
            .iter()
            .all(|v| v.is_finite())
    }) {
        return Err(Error::Fit("non-finite sweep statistics".into()));
    }
    let domain = (xs[0], xs[xs.len() - 1]);
    // Fit in the scaled variable u = x / scale for conditioning.
    let scale = domain.0.abs().max(domain.1.abs()).max(1e-300);
    let u: Vec<f64> = samples.iter().map(|s| s.x / scale).collect();
    let fit_channel = |mean: &dyn Fn(&SweepSample) -> f64,
                       std: &dyn Fn(&SweepSample) -> f64|
     -> Result<ChannelFit> {
        let (m, m_res) = least_squares(
            &u,
            &samples.iter().map(mean).collect::<Vec<_>>(),
            &[0, 1, 2, 3, 4],
        )?;
        let (s, s_res) = least_squares(
            &u,
            &samples.iter().map(std).collect::<Vec<_>>(),
            &[0, 2, 3, 4],
        )?;
        let unscale = |c: [f64; 5]| {
            let mut out = [0.0; 5];
            for (k, v) in c.iter().enumerate() {
                out[k] = v / scale.powi(k as i32);
            }
            out
        };
        Ok(ChannelFit {
            mean: unscale(m),
            std: unscale(s),
            mean_rms_residual: m_res,
            std_rms_residual: s_res,
        })
    };
    let fit = ResponseFit {
        yz: fit_channel(&|s| s.mean_yz, &|s| s.std_yz)?,
        xz: fit_channel(&|s| s.mean_xz, &|s| s.std_xz)?,
        domain,
    };
    for ch in Channel::BOTH {
        let c = fit.channel(ch);
        for k in 0..=200 {
            let x = domain.0 + (domain.1 - domain.0) * k as f64 / 200.0;
            if c.std_at(x) <= 0.0 {
                return Err(Error::Fit(format!(
                    "fitted {} spread is not positive at x = {x}",
                    ch.name()
                )));
            }
        }
    }
    Ok(fit)
}

/// Fits `y ~ sum_k c_k u^k` over the given powers; returns coefficients in a
/// dense 5-slot array and the RMS residual.
fn least_squares(u: &[f64], y: &[f64], powers: &[usize]) -> Result<([f64; 5], f64)> {
    let a = DMatrix::from_fn(u.len(), powers.len(), |r, c| u[r].powi(powers[c] as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Fit(format!(
            "rank-deficient design: singular values range {smin:e} .. {smax:e} for powers {powers:?}"
        )));
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let resid = &a * &sol - &b;
    let rms = (resid.norm_squared() / u.len() as f64).sqrt();
    let mut out = [0.0; 5];
    for (k, &p) in powers.iter().enumerate() {
        out[p] = sol[k];
    }
    Ok((out, rms))
}
