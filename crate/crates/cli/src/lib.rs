//! Scenario runner behind the `simulate` binary.
//!
//! Every run resolves its parameters from profile defaults overlaid with an
//! optional JSON config (or the `config` block of an earlier manifest),
//! writes CSV tables and a JSON summary, and records the resolved config,
//! seed and file checksums in `manifest.json`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use error::{CliError, CliResult, EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};
pub use output::OutputDir;
pub use scenarios::Scenario;

/// Environment variable consulted when `--workers` is absent.
pub const WORKERS_ENV: &str = "NEMATIC_WORKERS";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
const MANIFEST_VERSION: u32 = 1;

/// Parameter presets: desk-scale atom numbers or the full experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Fast,
    #[default]
    Paper,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub scenario: Scenario,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub profile: Profile,
    pub seed: u64,
    pub schema_version: u32,
    pub rng_algorithm: String,
    /// Informational; results do not depend on it.
    pub workers: usize,
    pub timestamp: String,
    pub config: Value,
    pub files: std::collections::BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub summary: Value,
}

/// Resolves, runs and records one scenario.
pub fn run(inv: &Invocation) -> CliResult<Outcome> {
    let (overlay, manifest_profile, manifest_seed) = match &inv.config {
        Some(path) => load_config(path, inv.scenario)?,
        None => (Value::Object(Default::default()), None, None),
    };
    let profile = inv.profile.or(manifest_profile).unwrap_or_default();
    let seed = inv.seed.or(manifest_seed).unwrap_or(0);
    let workers = resolve_workers(inv.workers)?;
    let runner = scenarios::resolve(inv.scenario, profile, overlay, seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let mut out = OutputDir::create(&inv.out)?;
    log::info!(
        "running {} ({:?} profile, seed {seed}, {workers} workers)",
        inv.scenario.name(),
        profile
    );
    let summary = pool.install(|| runner.execute(&mut out))?;
    out.write_json(SUMMARY_FILE, &summary)?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: inv.scenario,
        profile,
        seed,
        schema_version: inv.scenario.schema_version(),
        rng_algorithm: nematic_core::rng::RNG_ALGORITHM.to_string(),
        workers,
        timestamp: chrono::Utc::now().to_rfc3339(),
        config: runner.resolved_config(),
        files: out.checksums().clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let path = out.root().join(MANIFEST_FILE);
    std::fs::write(&path, bytes).map_err(|source| CliError::Output { path, source })?;
    Ok(Outcome {
        out_dir: inv.out.clone(),
        manifest,
        summary,
    })
}

/// Reads a parameter overlay. A manifest contributes its resolved config,
/// profile and seed; its scenario must match.
fn load_config(
    path: &Path,
    scenario: Scenario,
) -> CliResult<(Value, Option<Profile>, Option<u64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("config {} is not valid JSON: {e}", path.display()))
    })?;
    if value.get("manifest_version").is_some() {
        let m: Manifest = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("malformed manifest {}: {e}", path.display())))?;
        if m.scenario != scenario {
            return Err(CliError::Config(format!(
                "manifest records scenario `{}`, not `{}`",
                m.scenario.name(),
                scenario.name()
            )));
        }
        return Ok((m.config, Some(m.profile), Some(m.seed)));
    }
    if !value.is_object() {
        return Err(CliError::Config(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    }
    Ok((value, None, None))
}

fn resolve_workers(flag: Option<usize>) -> CliResult<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "{WORKERS_ENV} must be a positive integer, got `{v}`"
                ))
            })?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(CliError::Config("worker count must be at least 1".into()));
    }
    Ok(n)
}

/// Recursively overlays `patch` onto `base`; objects merge key by key,
/// anything else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
