use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nematic_core::metrology::{alignment_angle, quench_schedule};
use nematic_core::twa::{run_ensemble, Channel};
use nematic_core::SimConfig;

use super::{config_err, profile_sim, variance_stderr_db, Params};
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::Profile;

/// Squeezing against post-quench time from the TWA ensemble moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeScanParams {
    pub sim: SimConfig,
    /// Pre-quench hold at 13 |c2| (s).
    pub hold: f64,
    /// Spinor phase for the aligned columns; defaults to the alignment angle.
    pub spinor_angle: Option<f64>,
}

impl Default for SqueezeScanParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

#[derive(Debug, Serialize)]
struct Row {
    t: f64,
    n_atoms: f64,
    var_yz: f64,
    var_xz: f64,
    var_yz_over_n: f64,
    var_xz_over_n: f64,
    xi2_yz_db: f64,
    xi2_xz_db: f64,
    xi2_stderr_db: f64,
    xi2_opt_yz_db: f64,
    theta_opt_yz: f64,
    xi2_opt_xz_db: f64,
    theta_opt_xz: f64,
    xi2_undepleted_db: f64,
    flagged: bool,
}

impl Params for SqueezeScanParams {
    fn defaults(profile: Profile) -> Self {
        SqueezeScanParams {
            sim: profile_sim(profile),
            hold: 0.0,
            spinor_angle: None,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        self.sim.validate()?;
        if !(self.hold >= 0.0 && self.hold.is_finite()) {
            return Err(config_err(format!(
                "hold must be non-negative, got {}",
                self.hold
            )));
        }
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let config = quench_schedule(&self.sim, self.hold);
        let theta = self
            .spinor_angle
            .unwrap_or_else(|| alignment_angle(self.sim.c2));
        let ens = run_ensemble(&config)?;
        let survivors = (ens.n_traj - ens.aborted) as u64;
        let stderr_db = variance_stderr_db(survivors);
        let rows: Vec<Row> = ens
            .moments
            .iter()
            .map(|m| {
                let n = m.total.mean;
                let var_yz = m.quadrature_variance(Channel::Yz, theta);
                let var_xz = m.quadrature_variance(Channel::Xz, theta);
                let (theta_opt_yz, opt_yz) = m.optimal_quadrature(Channel::Yz);
                let (theta_opt_xz, opt_xz) = m.optimal_quadrature(Channel::Xz);
                Row {
                    t: m.t,
                    n_atoms: n,
                    var_yz,
                    var_xz,
                    var_yz_over_n: var_yz / n,
                    var_xz_over_n: var_xz / n,
                    xi2_yz_db: m.squeezing_db(var_yz),
                    xi2_xz_db: m.squeezing_db(var_xz),
                    xi2_stderr_db: stderr_db,
                    xi2_opt_yz_db: m.squeezing_db(opt_yz),
                    theta_opt_yz,
                    xi2_opt_xz_db: m.squeezing_db(opt_xz),
                    theta_opt_xz,
                    xi2_undepleted_db: -20.0 / std::f64::consts::LN_10 * self.sim.c2.abs() * m.t,
                    flagged: m.flagged,
                }
            })
            .collect();
        out.write_csv("squeeze_scan.csv", &rows)?;
        let best = rows
            .iter()
            .min_by(|a, b| (a.xi2_yz_db + a.xi2_xz_db).total_cmp(&(b.xi2_yz_db + b.xi2_xz_db)));
        Ok(json!({
            "scenario": "squeeze-scan",
            "n_atoms": self.sim.n_atoms,
            "n_traj": ens.n_traj,
            "aborted": ens.aborted,
            "spinor_angle": theta,
            "points": rows.len(),
            "best_t": best.map(|r| r.t),
            "best_xi2_yz_db": best.map(|r| r.xi2_yz_db),
            "best_xi2_xz_db": best.map(|r| r.xi2_xz_db),
            "max_abs_deviation_from_undepleted_db": rows
                .iter()
                .map(|r| (r.xi2_yz_db - r.xi2_undepleted_db).abs().max((r.xi2_xz_db - r.xi2_undepleted_db).abs()))
                .fold(0.0, f64::max),
        }))
    }
}
