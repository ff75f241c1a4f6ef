use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nematic_core::pipeline::{detect_calib, rf_calib, DetectCalibRow, RfCalibRow};

use super::{config_err, Params, FAST_ATOMS, PAPER_ATOMS};
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::Profile;

/// Number-difference noise of `(|+1> + |-1>)/sqrt2` against atom number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectCalibParams {
    pub n_values: Vec<u64>,
    pub shots: u64,
    /// Detection noise on each population (atoms).
    pub sigma_det: f64,
    pub seed: u64,
}

impl Default for DetectCalibParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

#[derive(Debug, Serialize)]
struct DetectCsv {
    n_atoms: u64,
    std_diff: f64,
    std_stderr: f64,
    expected_std: f64,
    sqrt_n: f64,
    z_score: f64,
}

impl Params for DetectCalibParams {
    fn defaults(profile: Profile) -> Self {
        let shots = match profile {
            Profile::Fast => 1000,
            Profile::Paper => 4000,
        };
        DetectCalibParams {
            n_values: vec![1000, 2000, 5000, 10_000, 15_000, 20_000, 25_000, 30_000],
            shots,
            sigma_det: 0.0,
            seed: 0,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(config_err("n_values must be non-empty and positive"));
        }
        if self.shots < 2 || !(self.sigma_det >= 0.0 && self.sigma_det.is_finite()) {
            return Err(config_err(
                "detect-calib needs >= 2 shots and non-negative sigma_det",
            ));
        }
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let rows = detect_calib(
            &self.n_values,
            self.shots,
            self.sigma_det,
            self.seed,
            "detect-calib",
        )?;
        let csv: Vec<DetectCsv> = rows.iter().map(|r| self.row(r)).collect();
        let max_z = csv.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
        out.write_csv("detect_calib.csv", &csv)?;
        Ok(json!({
            "scenario": "detect-calib",
            "points": csv.len(),
            "shots": self.shots,
            "max_abs_z_score": max_z,
        }))
    }
}

impl DetectCalibParams {
    fn row(&self, r: &DetectCalibRow) -> DetectCsv {
        let expected = (r.n_atoms as f64 + 2.0 * self.sigma_det * self.sigma_det).sqrt();
        DetectCsv {
            n_atoms: r.n_atoms,
            std_diff: r.std_diff,
            std_stderr: r.std_stderr,
            expected_std: expected,
            sqrt_n: r.sqrt_n,
            z_score: (r.std_diff - expected) / r.std_stderr,
        }
    }
}

/// `<N0>/N` against a small RF rotation from the pi/4-rotated polar state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfCalibParams {
    pub n_atoms: u64,
    pub alphas: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
}

impl Default for RfCalibParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

#[derive(Debug, Serialize)]
struct RfCsv {
    alpha: f64,
    n0_fraction: f64,
    stderr: f64,
    expected: f64,
}

impl Params for RfCalibParams {
    fn defaults(profile: Profile) -> Self {
        let n_atoms = match profile {
            Profile::Fast => FAST_ATOMS,
            Profile::Paper => PAPER_ATOMS,
        };
        RfCalibParams {
            n_atoms,
            alphas: (-5..=5).map(|k| 0.01 * k as f64).collect(),
            shots: 200,
            seed: 0,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        if self.n_atoms == 0 || self.shots < 2 || self.alphas.len() < 3 {
            return Err(config_err(
                "rf-calib needs atoms, >= 2 shots and >= 3 rotation angles",
            ));
        }
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let (rows, fit) = rf_calib(
            self.n_atoms,
            &self.alphas,
            self.shots,
            self.seed,
            "rf-calib",
        )?;
        let csv: Vec<RfCsv> = rows
            .iter()
            .map(|r: &RfCalibRow| RfCsv {
                alpha: r.alpha,
                n0_fraction: r.n0_fraction,
                stderr: r.stderr,
                expected: 0.5 * (1.0 + (2.0 * r.alpha).sin()),
            })
            .collect();
        out.write_csv("rf_calib.csv", &csv)?;
        Ok(json!({
            "scenario": "rf-calib",
            "n_atoms": self.n_atoms,
            "slope": fit.slope,
            "slope_stderr": fit.slope_stderr,
            "intercept": fit.intercept,
        }))
    }
}
