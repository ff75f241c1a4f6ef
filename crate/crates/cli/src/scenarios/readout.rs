use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nematic_core::measurement::NoiseConfig;
use nematic_core::pipeline::{compare_readouts, time_grid, Experiment, ExperimentConfig};

use super::{config_err, profile_sim, Params};
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::Profile;

/// Squeezing seen by the homodyne readout and by the vacuum-mixing readout
/// on the same trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KunkelParams {
    pub experiment: ExperimentConfig,
    pub times: Vec<f64>,
    pub n_traj: u64,
}

impl Default for KunkelParams {
    fn default() -> Self {
        Self::defaults(Profile::Paper)
    }
}

#[derive(Debug, Serialize)]
struct KunkelCsv {
    t: f64,
    n_atoms: f64,
    xi2_homodyne_yz_db: f64,
    xi2_homodyne_xz_db: f64,
    xi2_kunkel_yz_db: f64,
    xi2_kunkel_xz_db: f64,
}

impl Params for KunkelParams {
    fn defaults(profile: Profile) -> Self {
        KunkelParams {
            experiment: ExperimentConfig {
                sim: profile_sim(profile),
                hold: 0.0,
                noise: NoiseConfig::ideal(),
                ..ExperimentConfig::default()
            },
            times: time_grid(0.0, 0.1, 0.005),
            n_traj: 2000,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.experiment.sim.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        Experiment::new(self.experiment.clone())?;
        if self.times.is_empty()
            || self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
            || self.n_traj < 2
        {
            return Err(config_err(
                "kunkel-compare needs non-negative times and >= 2 trajectories",
            ));
        }
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        let exp = Experiment::new(self.experiment.clone())?;
        let rows = compare_readouts(&exp, &self.times, self.n_traj, "kunkel-compare")?;
        let csv: Vec<KunkelCsv> = rows
            .iter()
            .map(|r| KunkelCsv {
                t: r.t,
                n_atoms: r.n_atoms,
                xi2_homodyne_yz_db: r.xi2_homodyne_yz,
                xi2_homodyne_xz_db: r.xi2_homodyne_xz,
                xi2_kunkel_yz_db: r.xi2_kunkel_yz,
                xi2_kunkel_xz_db: r.xi2_kunkel_xz,
            })
            .collect();
        out.write_csv("kunkel_compare.csv", &csv)?;
        let min = |f: fn(&KunkelCsv) -> f64| csv.iter().map(f).fold(f64::INFINITY, f64::min);
        Ok(json!({
            "scenario": "kunkel-compare",
            "n_atoms": exp.n_atoms(),
            "n_traj": self.n_traj,
            "homodyne_min_db": min(|r| r.xi2_homodyne_yz_db.min(r.xi2_homodyne_xz_db)),
            "kunkel_min_db": min(|r| r.xi2_kunkel_yz_db.min(r.xi2_kunkel_xz_db)),
        }))
    }
}
