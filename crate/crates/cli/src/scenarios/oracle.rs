use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nematic_core::algebra::{
    evolve_exact, hamiltonian, moments_exact, operator_matrix, spinor_phase_exact, FockBasis,
    FockState, OperatorTag, MAX_ATOMS,
};
use nematic_core::metrology::alignment_angle;
use nematic_core::twa::{run_ensemble, Channel};
use nematic_core::SimConfig;

use super::{config_err, Params};
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::Profile;

/// Lossless TWA moments against exact Fock-space evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub n_atoms: u64,
    pub c2: f64,
    pub q: f64,
    pub times: Vec<f64>,
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    /// Relative tolerance; the acceptance band is max(rel * |exact|, 3 SE).
    pub rel_tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

#[derive(Debug, Serialize)]
struct OracleCsv {
    t: f64,
    observable: &'static str,
    exact_mean: f64,
    twa_mean: f64,
    twa_mean_stderr: f64,
    mean_ok: bool,
    exact_var: f64,
    twa_var: f64,
    twa_var_stderr: f64,
    var_ok: bool,
}

impl Params for OracleParams {
    fn defaults(_profile: Profile) -> Self {
        let base = SimConfig::lossless(100);
        OracleParams {
            n_atoms: 100,
            c2: base.c2,
            q: base.q0,
            times: vec![0.005, 0.010, 0.015],
            n_traj: 10_000,
            dt: base.dt,
            seed: 0,
            rel_tol: 0.05,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        if self.n_atoms == 0 || self.n_atoms as usize > MAX_ATOMS {
            return Err(config_err(format!(
                "oracle atom number must be in 1..={MAX_ATOMS}"
            )));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(config_err("oracle times must be non-negative"));
        }
        if self.n_traj < 2 || !(self.rel_tol >= 0.0) {
            return Err(config_err(
                "oracle needs >= 2 trajectories and a non-negative tolerance",
            ));
        }
        self.sim().validate()?;
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let config = self.sim();
        let twa = run_ensemble(&config)?;
        let basis = FockBasis::new(self.n_atoms as usize)?;
        let h = hamiltonian(&basis, self.c2, self.q);
        let qyz = operator_matrix(OperatorTag::Qyz, &basis);
        let qxz = operator_matrix(OperatorTag::Qxz, &basis);
        let polar = FockState::polar(&basis);
        let theta = alignment_angle(self.c2);
        let (c, s) = (theta.cos(), theta.sin());
        let n = (twa.n_traj - twa.aborted) as f64;
        let mut rows = Vec::new();
        for m in &twa.moments {
            let exact = evolve_exact(&polar, &h, m.t)?;
            let aligned = spinor_phase_exact(&exact, theta);
            let cases = [
                ("qyz", &exact, &qyz, m.qyz.mean, m.qyz.variance),
                ("qxz", &exact, &qxz, m.qxz.mean, m.qxz.variance),
                (
                    "qyz_aligned",
                    &aligned,
                    &qyz,
                    c * m.qyz.mean - s * m.lx.mean,
                    m.quadrature_variance(Channel::Yz, theta),
                ),
                (
                    "qxz_aligned",
                    &aligned,
                    &qxz,
                    c * m.qxz.mean + s * m.ly.mean,
                    m.quadrature_variance(Channel::Xz, theta),
                ),
            ];
            for (name, state, op, twa_mean, twa_var) in cases {
                let (exact_mean, exact_var) = moments_exact(state, op);
                let mean_se = (twa_var.max(0.0) / n).sqrt();
                let var_se = twa_var.abs() * (2.0 / (n - 1.0)).sqrt();
                rows.push(OracleCsv {
                    t: m.t,
                    observable: name,
                    exact_mean,
                    twa_mean,
                    twa_mean_stderr: mean_se,
                    mean_ok: (twa_mean - exact_mean).abs()
                        <= (self.rel_tol * exact_mean.abs()).max(3.0 * mean_se),
                    exact_var,
                    twa_var,
                    twa_var_stderr: var_se,
                    var_ok: (twa_var - exact_var).abs()
                        <= (self.rel_tol * exact_var).max(3.0 * var_se),
                });
            }
        }
        out.write_csv("oracle_compare.csv", &rows)?;
        let failures = rows.iter().filter(|r| !(r.mean_ok && r.var_ok)).count();
        Ok(json!({
            "scenario": "oracle-compare",
            "n_atoms": self.n_atoms,
            "n_traj": twa.n_traj,
            "aborted": twa.aborted,
            "comparisons": rows.len(),
            "failures": failures,
            "all_within_tolerance": failures == 0,
        }))
    }
}

impl OracleParams {
    fn sim(&self) -> SimConfig {
        SimConfig {
            c2: self.c2,
            q0: self.q,
            n_traj: self.n_traj,
            dt: self.dt,
            seed: self.seed,
            ..SimConfig::lossless(self.n_atoms)
        }
        .with_record_times(self.times.clone())
    }
}
