use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest rate-times-step product tolerated by the relative-drift heuristic.
pub const DRIFT_TOLERANCE: f64 = 1e-3;

/// Hold at a large quadratic Zeeman shift before the squeezing clock starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreQuench {
    /// Quadratic Zeeman shift during the hold (rad/s).
    pub q: f64,
    /// Hold duration (s).
    pub duration: f64,
}

/// Parameters of one truncated-Wigner ensemble.
///
/// Times in `record_times` are measured from the quench. Loss and the decay
/// of `c2` run on the total elapsed clock, which includes any pre-quench hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_atoms: u64,
    /// Spin-exchange rate (rad/s); negative for ferromagnetic 87Rb.
    pub c2: f64,
    /// Post-quench quadratic Zeeman shift (rad/s).
    pub q0: f64,
    /// Exponential ramp rate of q after the quench (1/s); 0 keeps q constant.
    pub q_ramp_rate: f64,
    /// One-body loss rate (1/s).
    pub gamma: f64,
    /// Decay rate of c2 caused by the shrinking density (1/s).
    pub gamma_c: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub record_times: Vec<f64>,
    pub pre_quench: Option<PreQuench>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::paper_defaults()
    }
}

impl SimConfig {
    /// The calibrated experimental parameters: N = 26000, c2 = -2pi 3.8 Hz,
    /// q = 2pi 3.9 Hz, gamma = 0.069/s. For Thomas-Fermi clouds c2 scales as
    /// N^(2/5), hence gamma_c = 0.4 gamma, and q ramps at the same rate.
    pub fn paper_defaults() -> Self {
        let gamma = 0.069;
        let gamma_c = 0.4 * gamma;
        let t_end = 0.1;
        SimConfig {
            n_atoms: 26_000,
            c2: -2.0 * PI * 3.8,
            q0: 2.0 * PI * 3.9,
            q_ramp_rate: gamma_c,
            gamma,
            gamma_c,
            dt: 2e-5,
            t_end,
            n_traj: 10_000,
            seed: 0,
            record_times: (0..=50).map(|k| k as f64 * t_end / 50.0).collect(),
            pre_quench: None,
        }
    }

    /// Lossless spin mixing at `q = |c2|`, the undepleted-pump benchmark.
    pub fn lossless(n_atoms: u64) -> Self {
        let c2 = -2.0 * PI * 3.8;
        SimConfig {
            n_atoms,
            c2,
            q0: c2.abs(),
            q_ramp_rate: 0.0,
            gamma: 0.0,
            gamma_c: 0.0,
            ..SimConfig::paper_defaults()
        }
    }

    pub fn with_record_times(mut self, times: Vec<f64>) -> Self {
        self.t_end = times.iter().copied().fold(0.0, f64::max);
        self.record_times = times;
        self
    }

    /// Checks invariants and returns the sorted, deduplicated record times.
    pub fn validate(&self) -> Result<Vec<f64>> {
        let err = |m: String| Err(Error::Config(m));
        if self.n_atoms == 0 {
            return err("n_atoms must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return err(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.n_traj == 0 {
            return err("n_traj must be at least 1".into());
        }
        for (name, v) in [
            ("c2", self.c2),
            ("q0", self.q0),
            ("q_ramp_rate", self.q_ramp_rate),
            ("gamma_c", self.gamma_c),
        ] {
            if !v.is_finite() {
                return err(format!("{name} must be finite"));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return err(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if let Some(pq) = self.pre_quench {
            if !(pq.duration >= 0.0 && pq.duration.is_finite() && pq.q.is_finite()) {
                return err(format!("invalid pre-quench hold {pq:?}"));
            }
        }
        let mut times = if self.record_times.is_empty() {
            vec![self.t_end]
        } else {
            self.record_times.clone()
        };
        if let Some(bad) = times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end * (1.0 + 1e-12)))
        {
            return err(format!(
                "record time {bad} outside [0, t_end = {}]",
                self.t_end
            ));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        let rate = self.c2.abs() + self.q0.abs() + 0.5 * self.gamma;
        if rate * self.dt > DRIFT_TOLERANCE {
            log::warn!(
                "dt = {:e} s gives a relative single-step drift of {:.2e}, above {DRIFT_TOLERANCE:e}",
                self.dt,
                rate * self.dt
            );
        }
        Ok(times)
    }

    pub fn hold_duration(&self) -> f64 {
        self.pre_quench.map_or(0.0, |p| p.duration)
    }

    /// Atom number `N e^{-gamma tau}` at elapsed time `tau`.
    pub fn atoms_at(&self, tau: f64) -> f64 {
        self.n_atoms as f64 * (-self.gamma * tau).exp()
    }

    /// `c2(tau)/N(tau)` and `q(tau)` at elapsed time `tau` (hold included).
    pub fn parameters_at(&self, tau: f64) -> (f64, f64) {
        let c2_eff = self.c2 / self.n_atoms as f64 * ((self.gamma - self.gamma_c) * tau).exp();
        let hold = self.hold_duration();
        let q = match self.pre_quench {
            Some(pq) if tau < hold => pq.q,
            _ => self.q0 * (-self.q_ramp_rate * (tau - hold)).exp(),
        };
        (c2_eff, q)
    }
}
