use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::amplitudes::ModeAmplitudes;
use super::config::{SimConfig, DRIFT_TOLERANCE};
use crate::rng::{complex_normal, seed_derive};
use crate::{Error, Result, C64};

/// Largest tolerated fraction of aborted (non-finite) trajectories.
pub const ABORT_BUDGET: f64 = 1e-3;

/// Wigner sample of the polar state: vacuum noise of variance 1/2 per mode
/// on top of the coherent amplitude `sqrt(N)` in `m = 0`.
pub fn sample_initial<R: Rng + ?Sized>(n_atoms: f64, rng: &mut R) -> ModeAmplitudes {
    sample_coherent(
        n_atoms,
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        rng,
    )
}

/// Wigner sample of a coherent state with every atom in the normalized
/// single-particle spinor `(c_+1, c_0, c_-1)`. Draw order is `+1, 0, -1`,
/// real part before imaginary.
pub fn sample_coherent<R: Rng + ?Sized>(
    n_atoms: f64,
    spinor: [C64; 3],
    rng: &mut R,
) -> ModeAmplitudes {
    let amp = n_atoms.sqrt();
    let mut out = [C64::new(0.0, 0.0); 3];
    for (o, c) in out.iter_mut().zip(spinor) {
        *o = c * amp + complex_normal(rng, 0.5);
    }
    ModeAmplitudes::from_array(out)
}

/// Deterministic part of the loss-including stochastic equations.
pub fn drift(psi: &ModeAmplitudes, c2_eff: f64, q: f64, gamma: f64) -> ModeAmplitudes {
    let (p, z, m) = (psi.plus, psi.zero, psi.minus);
    let (np, nz, nm) = (p.norm_sqr(), z.norm_sqr(), m.norm_sqr());
    let mi = C64::new(0.0, -c2_eff);
    let damp = 0.5 * gamma;
    ModeAmplitudes {
        plus: mi * (z * z * m.conj() + (np - nm + nz) * p) - damp * p,
        zero: mi * (2.0 * p * m * z.conj() + (np + nm) * z) + C64::new(0.0, q) * z - damp * z,
        minus: mi * (z * z * p.conj() + (nm - np + nz) * m) - damp * m,
    }
}

/// One Euler-Maruyama step of length `h` starting at elapsed time `tau`.
/// The loss noise `sqrt(gamma/2) dxi` uses `dxi = (u + i v) sqrt(h/2)`.
pub fn step<R: Rng + ?Sized>(
    psi: &ModeAmplitudes,
    tau: f64,
    h: f64,
    config: &SimConfig,
    rng: &mut R,
) -> ModeAmplitudes {
    let (c2_eff, q) = config.parameters_at(tau);
    let d = drift(psi, c2_eff, q, config.gamma);
    let mut next = *psi + d.scale(h);
    if config.gamma > 0.0 {
        let s = (0.5 * config.gamma).sqrt() * (0.5 * h).sqrt();
        next.plus += complex_normal(rng, s);
        next.zero += complex_normal(rng, s);
        next.minus += complex_normal(rng, s);
    }
    next
}

/// Integrates one trajectory through the pre-quench hold and returns its
/// amplitudes at each requested time after the quench, or `None` if it
/// became non-finite.
///
/// Each interval between consecutive stops is divided into equal steps no
/// longer than `config.dt`. During the hold the step is further capped so
/// that `(|c2| + q_hold) h` stays within the drift tolerance.
pub fn evolve<R: Rng + ?Sized>(
    config: &SimConfig,
    times: &[f64],
    mut psi: ModeAmplitudes,
    rng: &mut R,
) -> Option<Vec<ModeAmplitudes>> {
    let mut tau = 0.0;
    if let Some(pq) = config.pre_quench {
        let h_max = config
            .dt
            .min(DRIFT_TOLERANCE / (config.c2.abs() + pq.q.abs()).max(1e-300));
        psi = integrate(config, psi, &mut tau, pq.duration, h_max, rng)?;
    }
    let hold = tau;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        psi = integrate(config, psi, &mut tau, hold + t, config.dt, rng)?;
        out.push(psi);
    }
    Some(out)
}

fn integrate<R: Rng + ?Sized>(
    config: &SimConfig,
    mut psi: ModeAmplitudes,
    tau: &mut f64,
    until: f64,
    h_max: f64,
    rng: &mut R,
) -> Option<ModeAmplitudes> {
    let span = until - *tau;
    if span <= 0.0 {
        return Some(psi);
    }
    let n = ((span / h_max) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let start = *tau;
    for k in 0..n {
        psi = step(&psi, start + k as f64 * h, h, config, rng);
        if !psi.is_finite() {
            return None;
        }
    }
    *tau = until;
    Some(psi)
}

pub fn check_abort_budget(aborted: usize, total: usize) -> Result<()> {
    if total > 0 && aborted as f64 > ABORT_BUDGET * total as f64 {
        return Err(Error::AbortBudget {
            aborted,
            total,
            budget: ABORT_BUDGET,
        });
    }
    if aborted > 0 {
        log::warn!("{aborted} of {total} trajectories aborted on non-finite amplitudes");
    }
    Ok(())
}

/// Snapshots of every surviving trajectory of a polar-state ensemble.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    pub times: Vec<f64>,
    /// Trajectory indices, ascending; aborted indices are absent.
    pub indices: Vec<u64>,
    /// `snapshots[k][j]` is trajectory `indices[k]` at `times[j]`.
    pub snapshots: Vec<Vec<ModeAmplitudes>>,
    pub aborted: usize,
}

/// Runs `config.n_traj` polar-state trajectories on substreams
/// `seed_derive(config.seed, label, index)`.
pub fn run_trajectories(config: &SimConfig, label: &str) -> Result<TrajectorySet> {
    let times = config.validate()?;
    let results: Vec<Option<Vec<ModeAmplitudes>>> = (0..config.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(config, label, i);
            let psi = sample_initial(config.n_atoms as f64, &mut rng);
            evolve(config, &times, psi, &mut rng)
        })
        .collect();
    let mut set = TrajectorySet {
        times,
        indices: Vec::with_capacity(results.len()),
        snapshots: Vec::with_capacity(results.len()),
        aborted: 0,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Some(s) => {
                set.indices.push(i as u64);
                set.snapshots.push(s);
            }
            None => set.aborted += 1,
        }
    }
    check_abort_budget(set.aborted, config.n_traj)?;
    Ok(set)
}

pub(crate) fn trajectory_rng(config: &SimConfig, label: &str, index: u64) -> ChaCha20Rng {
    seed_derive(config.seed, label, index).rng()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Accumulator;

    #[test]
    fn initial_sampling_statistics() {
        let n = 10_000.0;
        let mut rng = seed_derive(1, "sampling", 0).rng();
        let mut plus = Accumulator::new();
        let mut zero_re = Accumulator::new();
        let mut n_plus = Accumulator::new();
        for _ in 0..100_000 {
            let s = sample_initial(n, &mut rng);
            plus.push(s.plus.re);
            zero_re.push(s.zero.re);
            n_plus.push(s.plus.norm_sqr());
        }
        // Corrected population <|psi_+1|^2> - 1/2 vanishes.
        assert!((n_plus.mean() - 0.5).abs() < 0.01);
        assert!(plus.mean().abs() < 0.01);
        assert!((zero_re.mean() - n.sqrt()).abs() < n.powf(0.25));
        assert!((zero_re.variance() - 0.25).abs() < 0.01);
    }

    #[test]
    fn pump_only_drift() {
        let psi = ModeAmplitudes::polar(100.0);
        let (q, gamma) = (3.0, 0.2);
        let d = drift(&psi, 0.0, q, gamma);
        let expected = C64::new(0.0, q) * psi.zero - 0.5 * gamma * psi.zero;
        assert!((d.zero - expected).norm() < 1e-12);
        assert_eq!(d.plus, C64::new(0.0, 0.0));
        // c2 acts on the pump only through |psi_+-1|^2, which vanishes here.
        let d = drift(&psi, -0.5, q, 0.0);
        assert!((d.zero - C64::new(0.0, q) * psi.zero).norm() < 1e-12);
    }

    #[test]
    fn pair_production_term() {
        // q = 0, gamma = 0, real amplitudes: d psi_+1 contains -i c2' psi_0^2 psi_-1^*.
        let c2 = -0.7;
        let psi = ModeAmplitudes::new(C64::new(0.0, 0.0), C64::new(3.0, 0.0), C64::new(0.5, 0.0));
        let d = drift(&psi, c2, 0.0, 0.0);
        assert!((d.plus - C64::new(0.0, -c2) * 9.0 * 0.5).norm() < 1e-12);
    }

    #[test]
    fn drift_conserves_magnetization_and_number() {
        let mut rng = seed_derive(3, "drift", 0).rng();
        let config = SimConfig::lossless(50);
        for _ in 0..100 {
            let psi = sample_initial(50.0, &mut rng);
            let d = drift(&psi, config.c2 / 50.0, config.q0, 0.0);
            let dlz = 2.0 * (psi.plus.conj() * d.plus).re - 2.0 * (psi.minus.conj() * d.minus).re;
            let dn = 2.0
                * (psi.plus.conj() * d.plus
                    + psi.zero.conj() * d.zero
                    + psi.minus.conj() * d.minus)
                    .re;
            assert!(dlz.abs() < 1e-10 && dn.abs() < 1e-10);
        }
    }

    #[test]
    fn lossless_step_draws_no_noise() {
        let config = SimConfig::lossless(100);
        let psi = ModeAmplitudes::polar(100.0);
        let mut a = seed_derive(0, "x", 0).rng();
        let mut b = seed_derive(0, "x", 1).rng();
        assert_eq!(
            step(&psi, 0.0, 1e-5, &config, &mut a),
            step(&psi, 0.0, 1e-5, &config, &mut b)
        );
    }

    #[test]
    fn abort_budget() {
        assert!(check_abort_budget(1, 1000).is_ok());
        assert!(matches!(
            check_abort_budget(2, 1000),
            Err(Error::AbortBudget { .. })
        ));
    }

    #[test]
    fn divergent_trajectories_abort() {
        let mut config = SimConfig::lossless(100);
        config.c2 = f64::MAX;
        let mut rng = seed_derive(0, "x", 0).rng();
        let psi = sample_initial(100.0, &mut rng);
        assert!(evolve(&config, &[0.001], psi, &mut rng).is_none());
    }

    #[test]
    fn snapshots_hit_requested_times() {
        let config = SimConfig::lossless(100).with_record_times(vec![0.0, 0.003, 0.0101]);
        config.validate().unwrap();
        let mut rng = seed_derive(0, "x", 0).rng();
        let psi = sample_initial(100.0, &mut rng);
        let out = evolve(&config, &[0.0, 0.003, 0.0101], psi, &mut rng).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], psi);
    }
}
