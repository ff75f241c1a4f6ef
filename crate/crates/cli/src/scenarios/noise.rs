use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nematic_core::pipeline::{
    gain_map, noise_sweep, Experiment, ExperimentConfig, GainMapConfig, NoiseSweepRow, Probe,
};

use super::gain_map::{gain_stats, time_scan_rows, MapTables, TimeScanParams};
use super::{config_err, profile_noise, profile_sim, Params};
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::Profile;

#[derive(Debug, Serialize)]
struct SweepCsv {
    value: f64,
    var_yz: f64,
    var_yz_stderr: f64,
    var_xz: f64,
    var_xz_stderr: f64,
    std_yz_over_sqrt_n: f64,
    std_xz_over_sqrt_n: f64,
    xi2_db: f64,
}

fn sweep_rows(rows: &[NoiseSweepRow], n: f64) -> Vec<SweepCsv> {
    rows.iter()
        .map(|r| SweepCsv {
            value: r.value,
            var_yz: r.var_yz.mean,
            var_yz_stderr: r.var_yz.mean_stderr,
            var_xz: r.var_xz.mean,
            var_xz_stderr: r.var_xz.mean_stderr,
            std_yz_over_sqrt_n: (r.var_yz.mean / n).sqrt(),
            std_xz_over_sqrt_n: (r.var_xz.mean / n).sqrt(),
            xi2_db: r.xi2_db,
        })
        .collect()
}

fn non_decreasing(rows: &[NoiseSweepRow]) -> bool {
    rows.windows(2)
        .all(|w| w[1].var_yz.mean >= w[0].var_yz.mean && w[1].var_xz.mean >= w[0].var_xz.mean)
}

fn check_values(values: &[f64], shots: u64) -> CliResult<()> {
    if values.is_empty() || values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(config_err("sweep values must be non-negative and finite"));
    }
    if shots < 2 {
        return Err(config_err("sweep needs at least 2 shots"));
    }
    Ok(())
}

/// Polar-probe noise against crosstalk strength, and the polar gain map at
/// the configured crosstalk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosstalkParams {
    pub experiment: ExperimentConfig,
    pub values: Vec<f64>,
    pub shots: u64,
    pub grid: GainMapConfig,
    pub gain_map: bool,
}

impl Default for CrosstalkParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

impl Params for CrosstalkParams {
    fn defaults(profile: Profile) -> Self {
        let sim = profile_sim(profile);
        let noise = profile_noise(sim.n_atoms);
        CrosstalkParams {
            experiment: ExperimentConfig {
                sim,
                noise,
                probe: Probe::Polar,
                // the calibration endpoint wants a converged grid mean, not one noise draw
                shots: 1000,
                ..ExperimentConfig::default()
            },
            values: (0..=12).map(|k| 0.05 * k as f64).collect(),
            shots: 2000,
            grid: GainMapConfig::default(),
            gain_map: true,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.experiment.sim.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        Experiment::new(self.experiment.clone())?;
        self.grid.validate()?;
        check_values(&self.values, self.shots)
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let exp = Experiment::new(self.experiment.clone())?;
        let n = exp.n_atoms();
        let rows = noise_sweep(
            &exp,
            &self.values,
            |c, v| c.delta_eta = v,
            self.shots,
            "calibrate-crosstalk/sweep",
        )?;
        out.write_csv("crosstalk.csv", &sweep_rows(&rows, n))?;
        let stats = if self.gain_map {
            let rays = gain_map(&exp, &self.grid, "calibrate-crosstalk/map")?;
            let mut tables = MapTables::new();
            tables.add(
                if self.experiment.probe == Probe::Polar {
                    "polar"
                } else {
                    "squeezed"
                },
                &rays,
                n,
            );
            tables.write(out, "crosstalk_gain")?;
            Some(gain_stats(&rays))
        } else {
            None
        };
        Ok(json!({
            "scenario": "calibrate-crosstalk",
            "n_atoms": n,
            "delta_eta": self.experiment.noise.delta_eta,
            "variance_non_decreasing": non_decreasing(&rows),
            "gain": stats,
        }))
    }
}

/// Squeezed-probe noise against pump phase jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpPhaseParams {
    pub experiment: ExperimentConfig,
    pub values: Vec<f64>,
    pub shots: u64,
    pub time_scan: TimeScanParams,
}

impl Default for PumpPhaseParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

impl Params for PumpPhaseParams {
    fn defaults(profile: Profile) -> Self {
        let sim = profile_sim(profile);
        let noise = profile_noise(sim.n_atoms);
        PumpPhaseParams {
            experiment: ExperimentConfig {
                sim,
                noise,
                ..ExperimentConfig::default()
            },
            values: (0..=10)
                .map(|k| 0.0015 * std::f64::consts::TAU * k as f64)
                .collect(),
            shots: 2000,
            time_scan: TimeScanParams::default(),
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.experiment.sim.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        Experiment::new(self.experiment.clone())?;
        self.time_scan.validate()?;
        check_values(&self.values, self.shots)
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let (t, scan) = self
            .time_scan
            .choose(&self.experiment, "calibrate-pump-phase/time-scan")?;
        if !scan.is_empty() {
            out.write_csv("time_scan.csv", &time_scan_rows(&scan))?;
        }
        let exp = Experiment::new(ExperimentConfig {
            squeeze_time: t,
            ..self.experiment.clone()
        })?;
        let n = exp.n_atoms();
        let rows = noise_sweep(
            &exp,
            &self.values,
            |c, v| c.delta_theta = v,
            self.shots,
            "calibrate-pump-phase/sweep",
        )?;
        out.write_csv("pump_phase.csv", &sweep_rows(&rows, n))?;
        Ok(json!({
            "scenario": "calibrate-pump-phase",
            "n_atoms": n,
            "squeeze_time": t,
            "delta_theta": self.experiment.noise.delta_theta,
            "variance_non_decreasing": non_decreasing(&rows),
        }))
    }
}
