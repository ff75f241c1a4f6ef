use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nematic_core::metrology::sql;
use nematic_core::pipeline::{
    gain_map, optimal_time, scan_squeeze_time, time_grid, Experiment, ExperimentConfig,
    GainMapConfig, Probe, RayResult, TimeScanRow,
};
use nematic_core::SqlMode;

use super::{config_err, profile_noise, profile_sim, Params};
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::Profile;

/// Measured-variance pre-scan used to pick the squeeze time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeScanParams {
    pub enabled: bool,
    pub start: f64,
    pub end: f64,
    pub step: f64,
    pub trajectories: u64,
}

impl Default for TimeScanParams {
    fn default() -> Self {
        TimeScanParams {
            enabled: true,
            start: 0.02,
            end: 0.1,
            step: 0.004,
            trajectories: 2000,
        }
    }
}

impl TimeScanParams {
    pub(super) fn validate(&self) -> CliResult<()> {
        if self.enabled
            && !(self.start >= 0.0
                && self.end >= self.start
                && self.step > 0.0
                && self.trajectories >= 2)
        {
            return Err(config_err(format!("invalid squeeze-time scan {self:?}")));
        }
        Ok(())
    }

    /// Runs the scan if enabled and returns the chosen time and the table.
    pub(super) fn choose(
        &self,
        experiment: &ExperimentConfig,
        label: &str,
    ) -> CliResult<(f64, Vec<TimeScanRow>)> {
        if !self.enabled || experiment.probe == Probe::Polar {
            return Ok((experiment.squeeze_time, Vec::new()));
        }
        let exp = Experiment::new(experiment.clone())?;
        let rows = scan_squeeze_time(
            &exp,
            &time_grid(self.start, self.end, self.step),
            self.trajectories,
            label,
        )?;
        let t = optimal_time(&rows).unwrap_or(experiment.squeeze_time);
        Ok((t, rows))
    }
}

#[derive(Debug, Serialize)]
pub(super) struct TimeScanCsv {
    t: f64,
    var_yz: f64,
    var_yz_stderr: f64,
    var_xz: f64,
    var_xz_stderr: f64,
    xi2_db: f64,
}

pub(super) fn time_scan_rows(rows: &[TimeScanRow]) -> Vec<TimeScanCsv> {
    rows.iter()
        .map(|r| TimeScanCsv {
            t: r.t,
            var_yz: r.var_yz.mean,
            var_yz_stderr: r.var_yz.mean_stderr,
            var_xz: r.var_xz.mean,
            var_xz_stderr: r.var_xz.mean_stderr,
            xi2_db: r.xi2_db,
        })
        .collect()
}

/// Gain map over phase pairs: squeezed probe at the chosen time plus a polar baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainMapParams {
    pub experiment: ExperimentConfig,
    pub grid: GainMapConfig,
    pub time_scan: TimeScanParams,
    pub polar_baseline: bool,
}

impl Default for GainMapParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

#[derive(Debug, Serialize)]
struct PointCsv {
    probe: &'static str,
    theta: f64,
    alpha: f64,
    phi1: f64,
    phi2: f64,
    dphi1: f64,
    dphi2: f64,
    sql1: f64,
    sql2: f64,
    gain_db: f64,
    center_yz_over_n: f64,
    center_xz_over_n: f64,
    radius_over_n: f64,
    shots: u64,
    aborted: usize,
}

#[derive(Debug, Serialize)]
struct SweepCsv {
    probe: &'static str,
    theta: f64,
    alpha: f64,
    shots: u64,
    mean_yz: f64,
    mean_yz_over_n: f64,
    std_yz: f64,
    std_yz_over_sqrt_n: f64,
    mean_xz: f64,
    mean_xz_over_n: f64,
    std_xz: f64,
    std_xz_over_sqrt_n: f64,
}

#[derive(Debug, Serialize)]
struct FitCsv {
    probe: &'static str,
    theta: f64,
    channel: &'static str,
    mean_c0: f64,
    mean_c1: f64,
    mean_c2: f64,
    mean_c3: f64,
    mean_c4: f64,
    std_c0: f64,
    std_c2: f64,
    std_c3: f64,
    std_c4: f64,
    mean_rms_residual: f64,
    std_rms_residual: f64,
    domain_min: f64,
    domain_max: f64,
}

/// Gain statistics over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainStats {
    pub points: usize,
    pub min_db: f64,
    pub max_db: f64,
    pub mean_db: f64,
    pub median_db: f64,
    /// Mean over the `alpha = 0` point of every ray.
    pub origin_mean_db: f64,
}

pub(super) fn gain_stats(rays: &[RayResult]) -> GainStats {
    let mut g: Vec<f64> = rays
        .iter()
        .flat_map(|r| r.points.iter().map(|p| p.gain.gain_db))
        .collect();
    g.sort_by(f64::total_cmp);
    let origin: Vec<f64> = rays
        .iter()
        .filter_map(|r| {
            r.points
                .iter()
                .min_by(|a, b| a.alpha.abs().total_cmp(&b.alpha.abs()))
        })
        .map(|p| p.gain.gain_db)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let median = if g.is_empty() {
        f64::NAN
    } else if g.len() % 2 == 1 {
        g[g.len() / 2]
    } else {
        0.5 * (g[g.len() / 2 - 1] + g[g.len() / 2])
    };
    GainStats {
        points: g.len(),
        min_db: g.first().copied().unwrap_or(f64::NAN),
        max_db: g.last().copied().unwrap_or(f64::NAN),
        mean_db: mean(&g),
        median_db: median,
        origin_mean_db: mean(&origin),
    }
}

pub(super) struct MapTables {
    points: Vec<PointCsv>,
    sweeps: Vec<SweepCsv>,
    fits: Vec<FitCsv>,
}

impl MapTables {
    pub(super) fn new() -> Self {
        MapTables {
            points: Vec::new(),
            sweeps: Vec::new(),
            fits: Vec::new(),
        }
    }

    pub(super) fn add(&mut self, probe: &'static str, rays: &[RayResult], n: f64) {
        for ray in rays {
            for p in &ray.points {
                self.points.push(PointCsv {
                    probe,
                    theta: p.theta,
                    alpha: p.alpha,
                    phi1: p.gain.phi1,
                    phi2: p.gain.phi2,
                    dphi1: p.gain.dphi1,
                    dphi2: p.gain.dphi2,
                    sql1: p.gain.sql1,
                    sql2: p.gain.sql2,
                    gain_db: p.gain.gain_db,
                    center_yz_over_n: p.scatter.center_yz,
                    center_xz_over_n: p.scatter.center_xz,
                    radius_over_n: p.scatter.radius,
                    shots: p.gain.shots,
                    aborted: p.aborted,
                });
            }
            for s in &ray.samples {
                self.sweeps.push(SweepCsv {
                    probe,
                    theta: ray.theta,
                    alpha: s.x,
                    shots: s.shots,
                    mean_yz: s.mean_yz,
                    mean_yz_over_n: s.mean_yz / n,
                    std_yz: s.std_yz,
                    std_yz_over_sqrt_n: s.std_yz / n.sqrt(),
                    mean_xz: s.mean_xz,
                    mean_xz_over_n: s.mean_xz / n,
                    std_xz: s.std_xz,
                    std_xz_over_sqrt_n: s.std_xz / n.sqrt(),
                });
            }
            for (channel, c) in [("yz", &ray.fit.yz), ("xz", &ray.fit.xz)] {
                self.fits.push(FitCsv {
                    probe,
                    theta: ray.theta,
                    channel,
                    mean_c0: c.mean[0],
                    mean_c1: c.mean[1],
                    mean_c2: c.mean[2],
                    mean_c3: c.mean[3],
                    mean_c4: c.mean[4],
                    std_c0: c.std[0],
                    std_c2: c.std[2],
                    std_c3: c.std[3],
                    std_c4: c.std[4],
                    mean_rms_residual: c.mean_rms_residual,
                    std_rms_residual: c.std_rms_residual,
                    domain_min: ray.fit.domain.0,
                    domain_max: ray.fit.domain.1,
                });
            }
        }
    }

    pub(super) fn write(&self, out: &mut OutputDir, prefix: &str) -> CliResult<()> {
        out.write_csv(&format!("{prefix}.csv"), &self.points)?;
        out.write_csv(&format!("{prefix}_sweep.csv"), &self.sweeps)?;
        out.write_csv(&format!("{prefix}_fits.csv"), &self.fits)
    }
}

impl Params for GainMapParams {
    fn defaults(profile: Profile) -> Self {
        let sim = profile_sim(profile);
        let noise = profile_noise(sim.n_atoms);
        GainMapParams {
            experiment: ExperimentConfig {
                sim,
                noise,
                ..ExperimentConfig::default()
            },
            grid: GainMapConfig::default(),
            time_scan: TimeScanParams::default(),
            polar_baseline: true,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.experiment.sim.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        Experiment::new(self.experiment.clone())?;
        self.grid.validate()?;
        self.time_scan.validate()
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let (t, scan) = self
            .time_scan
            .choose(&self.experiment, "gain-map/time-scan")?;
        if !scan.is_empty() {
            out.write_csv("time_scan.csv", &time_scan_rows(&scan))?;
        }
        let probe_cfg = ExperimentConfig {
            squeeze_time: t,
            ..self.experiment.clone()
        };
        let exp = Experiment::new(probe_cfg.clone())?;
        let n = exp.n_atoms();
        let probe_name = match probe_cfg.probe {
            Probe::Polar => "polar",
            Probe::Squeezed => "squeezed",
        };
        let rays = gain_map(&exp, &self.grid, "gain-map/probe")?;
        let mut tables = MapTables::new();
        tables.add(probe_name, &rays, n);
        let probe_stats = gain_stats(&rays);
        let polar_stats = if self.polar_baseline && probe_cfg.probe != Probe::Polar {
            let polar = Experiment::new(ExperimentConfig {
                probe: Probe::Polar,
                ..probe_cfg
            })?;
            let rays = gain_map(&polar, &self.grid, "gain-map/polar")?;
            tables.add("polar", &rays, n);
            Some(gain_stats(&rays))
        } else {
            None
        };
        tables.write(out, "gain_map")?;
        Ok(json!({
            "scenario": "gain-map",
            "n_atoms": n,
            "probe": probe_name,
            "squeeze_time": t,
            "sql_mode": self.grid.sql_mode,
            "sql_single": sql(n, SqlMode::Single)?,
            "sql_joint": sql(n, SqlMode::Joint)?,
            "gain": probe_stats,
            "polar_gain": polar_stats,
        }))
    }
}
