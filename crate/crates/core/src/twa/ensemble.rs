use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::amplitudes::{classical_observables, ModeAmplitudes};
use super::config::SimConfig;
use super::engine::{check_abort_budget, evolve, sample_initial, trajectory_rng};
use crate::stats::{Accumulator, CoAccumulator, Stat};
use crate::Result;

/// Trajectories per reduction chunk. Chunks are fixed by index, so the
/// merge tree and hence every rounding step is independent of thread count.
const CHUNK: u64 = 64;

/// Stream label of [`run_ensemble`].
pub const ENSEMBLE_STREAM: &str = "twa-ensemble";

/// The two simultaneously read spin-nematic quadrature channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// `Q_yz`, paired with `L_x` on its Bloch sphere.
    Yz,
    /// `Q_xz`, paired with `L_y` on its Bloch sphere.
    Xz,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Yz, Channel::Xz];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Yz => "yz",
            Channel::Xz => "xz",
        }
    }
}

/// Ensemble statistics at one record time. Populations and the total carry
/// the symmetric-ordering corrections (mean - 1/2, variance - 1/4 per mode);
/// quadratures are raw Weyl-symbol moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsAt {
    pub t: f64,
    pub n_plus: Stat,
    pub n_zero: Stat,
    pub n_minus: Stat,
    pub total: Stat,
    pub lz: Stat,
    pub qyz: Stat,
    pub qxz: Stat,
    pub lx: Stat,
    pub ly: Stat,
    pub cov_qyz_lx: f64,
    pub cov_qxz_ly: f64,
    pub cov_qyz_qxz: f64,
    /// Set when an ordering-corrected variance came out negative.
    pub flagged: bool,
}

impl MomentsAt {
    /// Variance of the channel after the spinor phase rotation
    /// `psi_0 -> psi_0 e^{-i theta}`, which maps
    /// `Q_yz -> cos Q_yz - sin L_x` and `Q_xz -> cos Q_xz + sin L_y`.
    pub fn quadrature_variance(&self, channel: Channel, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let (vq, vl, cov) = self.channel_block(channel);
        c * c * vq + s * s * vl + 2.0 * c * s * cov
    }

    /// Minimum over rotation angles of the channel variance and the angle
    /// achieving it (in `(-pi/2, pi/2]`).
    pub fn optimal_quadrature(&self, channel: Channel) -> (f64, f64) {
        let (vq, vl, cov) = self.channel_block(channel);
        // The form is (vq + vl)/2 + (vq - vl)/2 cos 2theta + cov sin 2theta.
        let theta = 0.5 * (-cov).atan2(-0.5 * (vq - vl));
        let var = 0.5 * (vq + vl) - (0.25 * (vq - vl).powi(2) + cov * cov).sqrt();
        (theta, var)
    }

    /// `(Var Q, Var L, signed covariance)` in the rotation convention above.
    fn channel_block(&self, channel: Channel) -> (f64, f64, f64) {
        match channel {
            Channel::Yz => (self.qyz.variance, self.lx.variance, -self.cov_qyz_lx),
            Channel::Xz => (self.qxz.variance, self.ly.variance, self.cov_qxz_ly),
        }
    }

    /// Squeezing in dB relative to the mean corrected atom number at this time.
    pub fn squeezing_db(&self, variance: f64) -> f64 {
        10.0 * (variance / self.total.mean).log10()
    }
}

/// Reduced moments of a truncated-Wigner ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoments {
    pub n_atoms: u64,
    pub n_traj: usize,
    pub aborted: usize,
    pub moments: Vec<MomentsAt>,
}

impl EnsembleMoments {
    pub fn at(&self, t: f64) -> Option<&MomentsAt> {
        self.moments
            .iter()
            .find(|m| (m.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

#[derive(Clone, Copy, Default)]
struct TimeAcc {
    pops: [Accumulator; 3],
    total: Accumulator,
    lz: Accumulator,
    quad: [Accumulator; 4],
    cov: [CoAccumulator; 3],
}

impl TimeAcc {
    fn push(&mut self, psi: &ModeAmplitudes) {
        let o = classical_observables(psi);
        self.pops[0].push(o.n_plus);
        self.pops[1].push(o.n_zero);
        self.pops[2].push(o.n_minus);
        self.total.push(o.n_plus + o.n_zero + o.n_minus);
        self.lz.push(o.lz);
        for (a, v) in self.quad.iter_mut().zip([o.qyz, o.qxz, o.lx, o.ly]) {
            a.push(v);
        }
        self.cov[0].push(o.qyz, o.lx);
        self.cov[1].push(o.qxz, o.ly);
        self.cov[2].push(o.qyz, o.qxz);
    }

    fn merge(&mut self, o: &TimeAcc) {
        for (a, b) in self.pops.iter_mut().zip(&o.pops) {
            a.merge(b);
        }
        self.total.merge(&o.total);
        self.lz.merge(&o.lz);
        for (a, b) in self.quad.iter_mut().zip(&o.quad) {
            a.merge(b);
        }
        for (a, b) in self.cov.iter_mut().zip(&o.cov) {
            a.merge(b);
        }
    }

    fn finish(&self, t: f64) -> MomentsAt {
        let n = self.total.count();
        let mut flagged = false;
        // Standard errors come from the raw Weyl-symbol spread.
        let mut corrected = |a: &Accumulator, modes: f64| {
            let mut s = Stat::from_parts(a.mean() - 0.5 * modes, a.variance(), n);
            s.variance -= 0.25 * modes;
            flagged |= s.variance < 0.0;
            s
        };
        let n_plus = corrected(&self.pops[0], 1.0);
        let n_zero = corrected(&self.pops[1], 1.0);
        let n_minus = corrected(&self.pops[2], 1.0);
        let total = corrected(&self.total, 3.0);
        MomentsAt {
            t,
            n_plus,
            n_zero,
            n_minus,
            total,
            lz: self.lz.summary(),
            qyz: self.quad[0].summary(),
            qxz: self.quad[1].summary(),
            lx: self.quad[2].summary(),
            ly: self.quad[3].summary(),
            cov_qyz_lx: self.cov[0].covariance(),
            cov_qxz_ly: self.cov[1].covariance(),
            cov_qyz_qxz: self.cov[2].covariance(),
            flagged,
        }
    }
}

/// Integrates the polar-state ensemble and reduces it to moments.
pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleMoments> {
    run_ensemble_labeled(config, ENSEMBLE_STREAM)
}

/// As [`run_ensemble`], drawing from the substreams of `label`.
pub fn run_ensemble_labeled(config: &SimConfig, label: &str) -> Result<EnsembleMoments> {
    let times = config.validate()?;
    let n_traj = config.n_traj as u64;
    let n_chunks = n_traj.div_ceil(CHUNK);
    let chunks: Vec<(Vec<TimeAcc>, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut accs = vec![TimeAcc::default(); times.len()];
            let mut aborted = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let mut rng = trajectory_rng(config, label, i);
                let psi = sample_initial(config.n_atoms as f64, &mut rng);
                match evolve(config, &times, psi, &mut rng) {
                    Some(snaps) => accs.iter_mut().zip(&snaps).for_each(|(a, s)| a.push(s)),
                    None => aborted += 1,
                }
            }
            (accs, aborted)
        })
        .collect();
    let mut total = vec![TimeAcc::default(); times.len()];
    let mut aborted = 0;
    for (accs, a) in &chunks {
        total.iter_mut().zip(accs).for_each(|(t, c)| t.merge(c));
        aborted += a;
    }
    check_abort_budget(aborted, config.n_traj)?;
    let moments: Vec<MomentsAt> = total
        .iter()
        .zip(&times)
        .map(|(a, &t)| a.finish(t))
        .collect();
    if moments.iter().any(|m| m.flagged) {
        log::warn!("negative ordering-corrected variance in ensemble; see `flagged` records");
    }
    Ok(EnsembleMoments {
        n_atoms: config.n_atoms,
        n_traj: config.n_traj,
        aborted,
        moments,
    })
}
