use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{Experiment, PointRun};
use crate::measurement::{kunkel_measure, measure, squeezing_parameter, NoiseConfig};
use crate::metrology::{
    fit_response, scatter_summary, GainResult, PhasePoint, ResponseFit, Scatter, SqlMode,
    SweepSample,
};
use crate::rng::seed_derive;
use crate::stats::{Accumulator, Stat};
use crate::twa::check_abort_budget;
use crate::{Error, Result};

/// Phase grid: `n_alpha` equally spaced `alpha` in `[-alpha_max, alpha_max]`
/// along each ray `Theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainMapConfig {
    pub thetas: Vec<f64>,
    pub alpha_max: f64,
    pub n_alpha: usize,
    pub sql_mode: SqlMode,
}

impl Default for GainMapConfig {
    fn default() -> Self {
        GainMapConfig {
            thetas: vec![PI / 8.0, 3.0 * PI / 8.0, 5.0 * PI / 8.0, 7.0 * PI / 8.0],
            alpha_max: 0.05 * PI,
            n_alpha: 11,
            sql_mode: SqlMode::Joint,
        }
    }
}

impl GainMapConfig {
    pub fn alphas(&self) -> Vec<f64> {
        if self.n_alpha < 2 {
            return vec![0.0];
        }
        (0..self.n_alpha)
            .map(|k| -self.alpha_max + 2.0 * self.alpha_max * k as f64 / (self.n_alpha - 1) as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() || self.thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config(
                "gain map needs at least one finite ray angle".into(),
            ));
        }
        if !(self.alpha_max > 0.0 && self.alpha_max <= PI) {
            return Err(Error::Config(format!(
                "alpha_max must be in (0, pi], got {}",
                self.alpha_max
            )));
        }
        Ok(())
    }
}

/// Gain and shot cloud at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub theta: f64,
    pub alpha: f64,
    pub gain: GainResult,
    pub scatter: Scatter,
    pub aborted: usize,
}

/// Sweep, fit and per-point gains along one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayResult {
    pub theta: f64,
    pub samples: Vec<SweepSample>,
    pub fit: ResponseFit,
    pub points: Vec<GridPoint>,
}

pub fn sweep_sample(x: f64, run: &PointRun) -> SweepSample {
    let yz: Accumulator = run.records.iter().map(|r| r.q_yz).collect();
    let xz: Accumulator = run.records.iter().map(|r| r.q_xz).collect();
    SweepSample {
        x,
        shots: yz.count(),
        mean_yz: yz.mean(),
        std_yz: yz.std_dev(),
        mean_xz: xz.mean(),
        std_xz: xz.std_dev(),
    }
}

/// Runs every ray of the grid. Shots of point `(i, j)` use the stream label
/// `{label}/ray{i}/alpha{j}`.
pub fn gain_map(exp: &Experiment, grid: &GainMapConfig, label: &str) -> Result<Vec<RayResult>> {
    grid.validate()?;
    let alphas = grid.alphas();
    let n = exp.n_atoms();
    let mut rays = Vec::with_capacity(grid.thetas.len());
    for (i, &theta) in grid.thetas.iter().enumerate() {
        let mut runs = Vec::with_capacity(alphas.len());
        for (j, &alpha) in alphas.iter().enumerate() {
            runs.push(exp.run_point(
                PhasePoint::from_polar(alpha, theta),
                &format!("{label}/ray{i}/alpha{j}"),
            )?);
        }
        let samples: Vec<SweepSample> = alphas
            .iter()
            .zip(&runs)
            .map(|(&a, r)| sweep_sample(a, r))
            .collect();
        let fit = fit_response(&samples)?;
        let mut points = Vec::with_capacity(runs.len());
        for (&alpha, run) in alphas.iter().zip(&runs) {
            points.push(GridPoint {
                theta,
                alpha,
                gain: GainResult::evaluate(
                    &fit,
                    run.phase,
                    theta,
                    n,
                    grid.sql_mode,
                    run.records.len() as u64,
                )?,
                scatter: scatter_summary(&run.records, n)?,
                aborted: run.aborted,
            });
        }
        rays.push(RayResult {
            theta,
            samples,
            fit,
            points,
        });
    }
    Ok(rays)
}

/// Measured quadrature noise of the unencoded probe at one squeeze time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScanRow {
    pub t: f64,
    pub var_yz: Stat,
    pub var_xz: Stat,
    /// `10 log10` of the channel-averaged variance over the nominal `N`.
    pub xi2_db: f64,
}

/// Measured variances at `alpha = 0` for each post-quench time, one
/// trajectory per shot recorded at every time.
pub fn scan_squeeze_time(
    exp: &Experiment,
    times: &[f64],
    n_traj: u64,
    label: &str,
) -> Result<Vec<TimeScanRow>> {
    let mut times = times.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.is_empty() || times[0] < 0.0 {
        return Err(Error::Config(
            "squeeze-time scan needs non-negative times".into(),
        ));
    }
    let results: Vec<Option<Vec<(f64, f64)>>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_derive(exp.config().sim.seed, label, i).rng();
            let states = exp.prepare_at(&times, &mut rng)?;
            Some(
                states
                    .iter()
                    .map(|s| {
                        let r = exp.measure(s, i, &mut rng);
                        (r.q_yz, r.q_xz)
                    })
                    .collect(),
            )
        })
        .collect();
    let mut acc = vec![(Accumulator::new(), Accumulator::new()); times.len()];
    let mut aborted = 0;
    for r in results {
        match r {
            Some(v) => {
                for (a, (y, x)) in acc.iter_mut().zip(v) {
                    a.0.push(y);
                    a.1.push(x);
                }
            }
            None => aborted += 1,
        }
    }
    check_abort_budget(aborted, n_traj as usize)?;
    let n = exp.n_atoms();
    Ok(times
        .iter()
        .zip(acc)
        .map(|(&t, (y, x))| {
            let var_yz = variance_stat(&y);
            let var_xz = variance_stat(&x);
            TimeScanRow {
                t,
                var_yz,
                var_xz,
                xi2_db: 10.0 * (0.5 * (var_yz.mean + var_xz.mean) / n).log10(),
            }
        })
        .collect())
}

/// Time with the smallest channel-averaged variance.
pub fn optimal_time(rows: &[TimeScanRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.xi2_db.is_finite())
        .min_by(|a, b| a.xi2_db.total_cmp(&b.xi2_db))
        .map(|r| r.t)
}

/// Candidate post-quench times `start, start + step, ..., <= end`.
pub fn time_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor().max(0.0) as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

/// Variance of the samples reported as a [`Stat`] whose mean is the variance.
fn variance_stat(acc: &Accumulator) -> Stat {
    let s = acc.summary();
    Stat {
        mean: s.variance,
        variance: 0.0,
        mean_stderr: s.variance_stderr,
        variance_stderr: f64::NAN,
    }
}

/// Probe noise under one value of a swept noise parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepRow {
    pub value: f64,
    pub var_yz: Stat,
    pub var_xz: Stat,
    pub xi2_db: f64,
}

/// Measured `alpha = 0` variances while `set` varies one noise parameter.
/// Every value reuses the same substreams, so only the swept channel differs
/// between rows.
pub fn noise_sweep<F>(
    exp: &Experiment,
    values: &[f64],
    set: F,
    shots: u64,
    label: &str,
) -> Result<Vec<NoiseSweepRow>>
where
    F: Fn(&mut NoiseConfig, f64) + Sync,
{
    let noises: Vec<NoiseConfig> = values
        .iter()
        .map(|&v| {
            let mut noise = exp.config().noise;
            set(&mut noise, v);
            noise.validate().map(|_| noise)
        })
        .collect::<Result<_>>()?;
    let results: Vec<Option<Vec<(f64, f64)>>> = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_derive(exp.config().sim.seed, label, i).rng();
            let psi = exp.prepare(&mut rng)?;
            Some(
                noises
                    .iter()
                    .map(|noise| {
                        let mut r = rng.clone();
                        let m = exp.measure_with(&psi, noise, i, &mut r);
                        (m.q_yz, m.q_xz)
                    })
                    .collect(),
            )
        })
        .collect();
    let mut acc = vec![(Accumulator::new(), Accumulator::new()); values.len()];
    let mut aborted = 0;
    for r in results {
        match r {
            Some(v) => {
                for (a, (y, x)) in acc.iter_mut().zip(v) {
                    a.0.push(y);
                    a.1.push(x);
                }
            }
            None => aborted += 1,
        }
    }
    check_abort_budget(aborted, shots as usize)?;
    let n = exp.n_atoms();
    Ok(values
        .iter()
        .zip(acc)
        .map(|(&value, (y, x))| {
            let var_yz = variance_stat(&y);
            let var_xz = variance_stat(&x);
            NoiseSweepRow {
                value,
                var_yz,
                var_xz,
                xi2_db: 10.0 * (0.5 * (var_yz.mean + var_xz.mean) / n).log10(),
            }
        })
        .collect())
}

/// Squeezing seen by the noise-free homodyne readout and by the
/// vacuum-mixing readout on the same trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutComparison {
    pub t: f64,
    pub n_atoms: f64,
    pub xi2_homodyne_yz: f64,
    pub xi2_homodyne_xz: f64,
    pub xi2_kunkel_yz: f64,
    pub xi2_kunkel_xz: f64,
}

pub fn compare_readouts(
    exp: &Experiment,
    times: &[f64],
    n_traj: u64,
    label: &str,
) -> Result<Vec<ReadoutComparison>> {
    let mut times = times.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let ideal = NoiseConfig {
        eps1: exp.config().noise.eps1,
        eps2: exp.config().noise.eps2,
        ..NoiseConfig::ideal()
    };
    let results: Vec<Option<Vec<[f64; 4]>>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_derive(exp.config().sim.seed, label, i).rng();
            let states = exp.prepare_at(&times, &mut rng)?;
            Some(
                states
                    .iter()
                    .map(|s| {
                        let h = measure(s, &ideal, i, &mut rng);
                        let (ky, kx) = kunkel_measure(s, &mut rng);
                        [h.q_yz, h.q_xz, ky, kx]
                    })
                    .collect(),
            )
        })
        .collect();
    let mut acc = vec![[Accumulator::new(); 4]; times.len()];
    let mut aborted = 0;
    for r in results {
        match r {
            Some(v) => {
                for (a, vals) in acc.iter_mut().zip(v) {
                    for (ak, x) in a.iter_mut().zip(vals) {
                        ak.push(x);
                    }
                }
            }
            None => aborted += 1,
        }
    }
    check_abort_budget(aborted, n_traj as usize)?;
    let physics = exp.physics();
    times
        .iter()
        .zip(acc)
        .map(|(&t, a)| {
            let n = match exp.config().probe {
                super::Probe::Polar => exp.n_atoms(),
                super::Probe::Squeezed => physics.atoms_at(physics.hold_duration() + t),
            };
            Ok(ReadoutComparison {
                t,
                n_atoms: n,
                xi2_homodyne_yz: squeezing_parameter(a[0].std_dev(), n)?,
                xi2_homodyne_xz: squeezing_parameter(a[1].std_dev(), n)?,
                xi2_kunkel_yz: squeezing_parameter(a[2].std_dev(), n)?,
                xi2_kunkel_xz: squeezing_parameter(a[3].std_dev(), n)?,
            })
        })
        .collect()
}
