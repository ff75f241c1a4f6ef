//! Named experiments. Each scenario owns a parameter block with
//! profile-dependent defaults and a versioned CSV schema.

mod calibration;
mod gain_map;
mod noise;
mod oracle;
mod readout;
mod squeeze;

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use nematic_core::measurement::NoiseConfig;
use nematic_core::SimConfig;

use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::{merge, Profile};

pub use calibration::{DetectCalibParams, RfCalibParams};
pub use gain_map::{GainMapParams, TimeScanParams};
pub use noise::{CrosstalkParams, PumpPhaseParams};
pub use oracle::OracleParams;
pub use readout::KunkelParams;
pub use squeeze::SqueezeScanParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SqueezeScan,
    GainMap,
    CalibrateCrosstalk,
    CalibratePumpPhase,
    DetectCalib,
    RfCalib,
    OracleCompare,
    KunkelCompare,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::SqueezeScan,
        Scenario::GainMap,
        Scenario::CalibrateCrosstalk,
        Scenario::CalibratePumpPhase,
        Scenario::DetectCalib,
        Scenario::RfCalib,
        Scenario::OracleCompare,
        Scenario::KunkelCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SqueezeScan => "squeeze-scan",
            Scenario::GainMap => "gain-map",
            Scenario::CalibrateCrosstalk => "calibrate-crosstalk",
            Scenario::CalibratePumpPhase => "calibrate-pump-phase",
            Scenario::DetectCalib => "detect-calib",
            Scenario::RfCalib => "rf-calib",
            Scenario::OracleCompare => "oracle-compare",
            Scenario::KunkelCompare => "kunkel-compare",
        }
    }

    /// Version of the scenario's CSV column set; bumped on any change.
    pub fn schema_version(self) -> u32 {
        1
    }
}

impl std::str::FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario `{s}`")))
    }
}

/// A scenario with fully resolved parameters.
pub trait Runner: Send + Sync {
    fn execute(&self, out: &mut OutputDir) -> CliResult<Value>;
    fn resolved_config(&self) -> Value;
}

trait Params: Serialize + DeserializeOwned + 'static + Send + Sync {
    fn defaults(profile: Profile) -> Self;
    fn set_seed(&mut self, seed: u64);
    fn validate(&self) -> CliResult<()>;
    fn execute(&self, out: &mut OutputDir) -> CliResult<Value>;
}

struct Resolved<P>(P);

impl<P: Params> Runner for Resolved<P> {
    fn execute(&self, out: &mut OutputDir) -> CliResult<Value> {
        self.0.execute(out)
    }

    fn resolved_config(&self) -> Value {
        serde_json::to_value(&self.0).expect("parameters serialize")
    }
}

fn build<P: Params>(profile: Profile, overlay: Value, seed: u64) -> CliResult<Box<dyn Runner>> {
    let mut base = serde_json::to_value(P::defaults(profile)).expect("defaults serialize");
    merge(&mut base, overlay);
    let mut params: P =
        serde_json::from_value(base).map_err(|e| CliError::Config(e.to_string()))?;
    params.set_seed(seed);
    params.validate()?;
    Ok(Box::new(Resolved(params)))
}

pub fn resolve(
    scenario: Scenario,
    profile: Profile,
    overlay: Value,
    seed: u64,
) -> CliResult<Box<dyn Runner>> {
    match scenario {
        Scenario::SqueezeScan => build::<SqueezeScanParams>(profile, overlay, seed),
        Scenario::GainMap => build::<GainMapParams>(profile, overlay, seed),
        Scenario::CalibrateCrosstalk => build::<CrosstalkParams>(profile, overlay, seed),
        Scenario::CalibratePumpPhase => build::<PumpPhaseParams>(profile, overlay, seed),
        Scenario::DetectCalib => build::<DetectCalibParams>(profile, overlay, seed),
        Scenario::RfCalib => build::<RfCalibParams>(profile, overlay, seed),
        Scenario::OracleCompare => build::<OracleParams>(profile, overlay, seed),
        Scenario::KunkelCompare => build::<KunkelParams>(profile, overlay, seed),
    }
}

/// Atom number of the fast profile.
pub const FAST_ATOMS: u64 = 1000;
/// Atom number of the calibrated experiment.
pub const PAPER_ATOMS: u64 = 26_000;

fn profile_sim(profile: Profile) -> SimConfig {
    match profile {
        Profile::Paper => SimConfig::paper_defaults(),
        Profile::Fast => SimConfig {
            n_atoms: FAST_ATOMS,
            n_traj: 1000,
            ..SimConfig::paper_defaults()
        },
    }
}

/// Calibrated noise with the detection noise scaled as `sqrt(N)` so that
/// its weight relative to shot noise matches the full-size experiment.
fn profile_noise(n_atoms: u64) -> NoiseConfig {
    let calibrated = NoiseConfig::calibrated();
    NoiseConfig {
        sigma_det: calibrated.sigma_det * (n_atoms as f64 / PAPER_ATOMS as f64).sqrt(),
        ..calibrated
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `10 log10` standard error of a variance estimate from `n` samples.
fn variance_stderr_db(n: u64) -> f64 {
    if n < 2 {
        return f64::NAN;
    }
    10.0 / std::f64::consts::LN_10 * (2.0 / (n - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            assert_eq!(
                serde_json::to_value(s).unwrap(),
                Value::String(s.name().into())
            );
        }
        assert!("fig-9".parse::<Scenario>().is_err());
    }

    #[test]
    fn defaults_resolve_for_every_profile() {
        for s in Scenario::ALL {
            for p in [Profile::Fast, Profile::Paper] {
                let r = resolve(s, p, Value::Object(Default::default()), 7).unwrap();
                let again = resolve(s, p, r.resolved_config(), 7).unwrap();
                assert_eq!(r.resolved_config(), again.resolved_config());
            }
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let overlay = serde_json::json!({"no_such_field": 1});
        for s in Scenario::ALL {
            assert!(matches!(
                resolve(s, Profile::Fast, overlay.clone(), 0),
                Err(CliError::Config(_))
            ));
        }
    }
}
