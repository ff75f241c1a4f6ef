//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion runs the real scenario at its stated parameters.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tempfile::TempDir;

use nematic_cli::{run, Invocation, Manifest, Profile, Scenario, MANIFEST_FILE, SUMMARY_FILE};
use nematic_core::algebra::{
    evolve_exact, hamiltonian, operator_matrix, rotate_exact, FockBasis, FockState, OperatorTag,
};
use nematic_core::metrology::{sql, SqlMode};
use nematic_core::rng::seed_derive;
use nematic_core::twa::{classical_observables, evolve, run_ensemble, sample_initial, Channel};
use nematic_core::{SimConfig, C64};

const SEED: u64 = 0;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let line = format!(
            "{} {id}. {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((pass, line));
    }
}

struct Run {
    dir: PathBuf,
    elapsed: Duration,
    summary: Value,
}

impl Run {
    fn csv<T: DeserializeOwned>(&self, name: &str) -> Vec<T> {
        csv::Reader::from_path(self.dir.join(name))
            .unwrap_or_else(|e| panic!("{name}: {e}"))
            .deserialize()
            .map(|r| r.unwrap())
            .collect()
    }

    fn num(&self, pointer: &str) -> f64 {
        self.summary
            .pointer(pointer)
            .and_then(Value::as_f64)
            .unwrap_or(f64::NAN)
    }
}

fn simulate(
    tmp: &Path,
    scenario: Scenario,
    profile: Profile,
    overlay: Value,
    workers: Option<usize>,
) -> Run {
    let tag = format!("{}-{profile:?}-{}", scenario.name(), workers.unwrap_or(0));
    let config = tmp.join(format!("{tag}.json"));
    std::fs::write(&config, serde_json::to_vec(&overlay).unwrap()).unwrap();
    let dir = tmp.join(tag);
    let start = Instant::now();
    run(&Invocation {
        scenario,
        config: Some(config),
        out: dir.clone(),
        seed: Some(SEED),
        workers,
        profile: Some(profile),
    })
    .unwrap_or_else(|e| panic!("{} failed: {e}", scenario.name()));
    let elapsed = start.elapsed();
    let summary = serde_json::from_slice(&std::fs::read(dir.join(SUMMARY_FILE)).unwrap()).unwrap();
    Run {
        dir,
        elapsed,
        summary,
    }
}

#[derive(Deserialize)]
struct SqueezeRow {
    t: f64,
    xi2_yz_db: f64,
    xi2_xz_db: f64,
}

fn squeezing_law(tmp: &Path, r: &mut Report) {
    let c2: f64 = -2.0 * std::f64::consts::PI * 3.8;
    let times: Vec<f64> = (0..=12).map(|k| 1e-3 * k as f64).collect();
    let overlay = json!({"sim": {
        "n_atoms": 26000, "c2": c2, "q0": c2.abs(), "q_ramp_rate": 0.0, "gamma": 0.0, "gamma_c": 0.0,
        "n_traj": 1000, "t_end": 0.012, "record_times": times,
    }});
    let run = simulate(tmp, Scenario::SqueezeScan, Profile::Paper, overlay, None);
    let rows: Vec<SqueezeRow> = run.csv("squeeze_scan.csv");
    // two-mode squeezing of the undepleted pump: xi^2 = e^{-2|c2|t}
    let law = |t: f64| 10.0 * (-2.0 * c2.abs() * t).exp().log10();
    let worst = rows
        .iter()
        .filter(|x| x.t <= 0.012 + 1e-12)
        .map(|x| {
            (x.xi2_yz_db - law(x.t))
                .abs()
                .max((x.xi2_xz_db - law(x.t)).abs())
        })
        .fold(0.0, f64::max);
    let at10 = rows
        .iter()
        .find(|x| (x.t - 0.010).abs() < 1e-9)
        .map_or(f64::NAN, |x| x.xi2_yz_db);
    let pass = rows.len() == 13 && worst <= 0.5 && run.elapsed < Duration::from_secs(120);
    r.record(
        1,
        "analytic squeezing law",
        pass,
        format!(
            "max |xi2 - law| = {worst:.3} dB over t <= 12 ms (limit 0.5); xi2(10 ms) = {at10:.2} dB vs {:.2} dB; {:.1} s",
            law(0.010),
            run.elapsed.as_secs_f64()
        ),
    );
}

fn oracle(tmp: &Path, r: &mut Report) {
    let run = simulate(
        tmp,
        Scenario::OracleCompare,
        Profile::Paper,
        json!({}),
        None,
    );
    let failures = run.num("/failures");
    let comparisons = run.num("/comparisons");
    let pass = failures == 0.0 && comparisons == 12.0 && run.elapsed < Duration::from_secs(300);
    r.record(
        2,
        "oracle equivalence",
        pass,
        format!(
            "{failures} of {comparisons} mean/variance comparisons outside max(5%, 3 SE); {:.1} s",
            run.elapsed.as_secs_f64()
        ),
    );
}

fn sql_values(r: &mut Report) {
    let n = 26000f64;
    let single = sql(n, SqlMode::Single).unwrap();
    let joint = sql(n, SqlMode::Joint).unwrap();
    let (want_single, want_joint) = (0.5 / n.sqrt(), 1.0 / 52000f64.sqrt());
    let ulps = |a: f64, b: f64| (a.to_bits() as i64 - b.to_bits() as i64).abs();
    let pass = ulps(single, want_single) <= 1 && ulps(joint, want_joint) <= 1;
    r.record(
        3,
        "SQL values",
        pass,
        format!("single {single:.17e} (want {want_single:.17e}), joint {joint:.17e} (want {want_joint:.17e})"),
    );
}

#[derive(Deserialize)]
struct KunkelRow {
    xi2_homodyne_yz_db: f64,
    xi2_homodyne_xz_db: f64,
    xi2_kunkel_yz_db: f64,
    xi2_kunkel_xz_db: f64,
}

fn kunkel_floor(tmp: &Path, r: &mut Report) {
    let mut pass = true;
    let mut detail = Vec::new();
    for profile in [Profile::Fast, Profile::Paper] {
        let run = simulate(tmp, Scenario::KunkelCompare, profile, json!({}), None);
        let rows: Vec<KunkelRow> = run.csv("kunkel_compare.csv");
        let kunkel = rows
            .iter()
            .map(|x| x.xi2_kunkel_yz_db.min(x.xi2_kunkel_xz_db))
            .fold(f64::INFINITY, f64::min);
        let homodyne = rows
            .iter()
            .map(|x| x.xi2_homodyne_yz_db.min(x.xi2_homodyne_xz_db))
            .fold(f64::INFINITY, f64::min);
        pass &= !rows.is_empty() && kunkel >= -3.2 && homodyne < -5.0;
        detail.push(format!(
            "N={}: vacuum-mixing min {kunkel:.2} dB (floor -3.2), homodyne min {homodyne:.2} dB (need < -5)",
            run.num("/n_atoms")
        ));
    }
    r.record(4, "readout floor", pass, detail.join("; "));
}

fn crosstalk_endpoint(tmp: &Path, r: &mut Report) {
    let run = simulate(
        tmp,
        Scenario::CalibrateCrosstalk,
        Profile::Paper,
        json!({}),
        None,
    );
    let mean = run.num("/gain/mean_db");
    let origin = run.num("/gain/origin_mean_db");
    let monotone = run.summary["variance_non_decreasing"].as_bool() == Some(true);
    let pass = (-3.0..=-1.0).contains(&mean) && monotone;
    r.record(
        5,
        "noise calibration endpoints",
        pass,
        format!(
            "polar joint gain over the grid {mean:.2} dB (band -2 +- 1; at the origin {origin:.2} dB); variance monotone in delta_eta: {monotone}"
        ),
    );
}

#[derive(Deserialize)]
struct GainRow {
    probe: String,
    gain_db: f64,
}

fn gain_band(tmp: &Path, r: &mut Report) {
    let run = simulate(tmp, Scenario::GainMap, Profile::Paper, json!({}), None);
    let gains: Vec<f64> = run
        .csv::<GainRow>("gain_map.csv")
        .into_iter()
        .filter(|x| x.probe == "squeezed")
        .map(|x| x.gain_db)
        .collect();
    let all = gains.iter().all(|g| (2.5..=7.0).contains(g));
    let inner = gains.iter().filter(|g| (2.6..=7.0).contains(*g)).count();
    let (lo, hi) = gains
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), g| {
            (a.min(*g), b.max(*g))
        });
    let pass = gains.len() == 44 && all && 2 * inner > gains.len();
    let fast = simulate(tmp, Scenario::GainMap, Profile::Fast, json!({}), None);
    r.record(
        6,
        "gain band",
        pass,
        format!(
            "N=26000: {} points in [{lo:.2}, {hi:.2}] dB, {inner} within [2.6, 7.0], squeeze time {:.3} s, {:.1} s; N=1000 fast profile: [{:.2}, {:.2}] dB",
            gains.len(),
            run.num("/squeeze_time"),
            run.elapsed.as_secs_f64(),
            fast.num("/gain/min_db"),
            fast.num("/gain/max_db"),
        ),
    );
}

#[derive(Deserialize)]
struct DetectRow {
    n_atoms: f64,
    std_diff: f64,
    std_stderr: f64,
}

fn calibrations(tmp: &Path, r: &mut Report) {
    let detect = simulate(
        tmp,
        Scenario::DetectCalib,
        Profile::Paper,
        json!({"sigma_det": 0.0}),
        None,
    );
    let rows: Vec<DetectRow> = detect.csv("detect_calib.csv");
    let z = rows
        .iter()
        .map(|x| ((x.std_diff - x.n_atoms.sqrt()) / x.std_stderr).abs())
        .fold(0.0, f64::max);
    let span = rows
        .iter()
        .map(|x| x.n_atoms)
        .fold((f64::INFINITY, 0.0f64), |(a, b), n| (a.min(n), b.max(n)));
    let detect_ok = z <= 3.0 && span.0 <= 1e3 && span.1 >= 3e4;
    let rf = simulate(tmp, Scenario::RfCalib, Profile::Paper, json!({}), None);
    let slope = rf.num("/slope");
    let rf_ok = (slope - 1.0).abs() <= 0.05;
    r.record(
        7,
        "calibration scenarios",
        detect_ok && rf_ok,
        format!(
            "detect-calib max |std - sqrt N|/SE = {z:.2} over N in [{:.0}, {:.0}]; rf-calib slope {slope:.4} +- {:.4}",
            span.0,
            span.1,
            rf.num("/slope_stderr")
        ),
    );
}

fn properties(tmp: &Path, r: &mut Report) {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let i = C64::new(0.0, 1.0);

    let b = FockBasis::new(12).unwrap();
    let op = |t| operator_matrix(t, &b);
    let (lx, ly, lz) = (
        op(OperatorTag::Lx),
        op(OperatorTag::Ly),
        op(OperatorTag::Lz),
    );
    let half = C64::new(0.5, 0.0);
    let d_yy = op(OperatorTag::Qyy).sub(&op(OperatorTag::Qzz)).scale(half);
    let d_xx = op(OperatorTag::Qxx).sub(&op(OperatorTag::Qzz)).scale(half);
    let su3 = lx.commutator(&ly).max_abs_diff(&lz.scale(i)) < 1e-10
        && ly.commutator(&lz).max_abs_diff(&lx.scale(i)) < 1e-10
        && lz.commutator(&lx).max_abs_diff(&ly.scale(i)) < 1e-10
        && op(OperatorTag::Qyz)
            .commutator(&lx)
            .max_abs_diff(&d_yy.scale(i * 2.0))
            < 1e-10
        && ly
            .commutator(&op(OperatorTag::Qxz))
            .max_abs_diff(&d_xx.scale(i * 2.0))
            < 1e-10;
    check("su(3) commutators", su3);

    let phases: Vec<C64> = (0..b.len())
        .map(|k| C64::from_polar(1.0, FRAC_PI_2 * b.magnetization(k) as f64))
        .collect();
    let rotated = op(OperatorTag::Qyz).conjugate_by_diagonal(&phases);
    check(
        "rotation relation",
        rotated.max_abs_diff(&op(OperatorTag::Qxz)) < 1e-9,
    );

    let b100 = FockBasis::new(100).unwrap();
    let c2 = -2.0 * std::f64::consts::PI * 3.8;
    let h = hamiltonian(&b100, c2, c2.abs());
    let polar = FockState::polar(&b100);
    let drift = [0.005, 0.015, 0.05]
        .iter()
        .map(|&t| (evolve_exact(&polar, &h, t).unwrap().norm() - 1.0).abs())
        .chain([(rotate_exact(&polar, 0.3, -0.2).unwrap().norm() - 1.0).abs()])
        .fold(0.0, f64::max);
    check("unitarity", drift < 1e-10);

    let config = SimConfig::lossless(1000).with_record_times(vec![0.02]);
    let conserved = (0..20).all(|k| {
        let mut rng = seed_derive(SEED, "acceptance/conservation", k).rng();
        let psi = sample_initial(1000.0, &mut rng);
        let end = evolve(&config, &[0.02], psi, &mut rng).unwrap()[0];
        let (a, e) = (classical_observables(&psi), classical_observables(&end));
        (e.lz - a.lz).abs() < 2e-3 * psi.total().sqrt()
    });
    check("magnetization conservation", conserved);

    let overlay = json!({
        "experiment": {"shots": 20, "sim": {"n_traj": 300}},
        "grid": {"n_alpha": 7},
        "time_scan": {"enabled": true, "trajectories": 200, "start": 0.02, "end": 0.06, "step": 0.01},
    });
    let manifests: Vec<Manifest> = [1, 4, 16]
        .iter()
        .map(|&w| {
            let run = simulate(
                tmp,
                Scenario::GainMap,
                Profile::Fast,
                overlay.clone(),
                Some(w),
            );
            serde_json::from_slice(&std::fs::read(run.dir.join(MANIFEST_FILE)).unwrap()).unwrap()
        })
        .collect();
    check(
        "parallel determinism",
        manifests.windows(2).all(|m| m[0].files == m[1].files),
    );

    let base = SimConfig {
        n_traj: 2000,
        ..SimConfig::lossless(26_000).with_record_times(vec![0.015])
    };
    let xi = |dt: f64| {
        let at = run_ensemble(&SimConfig { dt, ..base.clone() })
            .unwrap()
            .moments[0]
            .clone();
        at.squeezing_db(at.quadrature_variance(Channel::Yz, -FRAC_PI_4))
    };
    let (coarse, fine) = (xi(base.dt), xi(base.dt / 2.0));
    check("dt self-convergence", (coarse - fine).abs() < 0.05);

    let detail = if failed.is_empty() {
        format!(
            "6 of 6 suites hold (norm drift {drift:.1e}, dt halving moves xi2 by {:.1e} dB)",
            (coarse - fine).abs()
        )
    } else {
        format!("failing: {}", failed.join(", "))
    };
    r.record(8, "property suites", failed.is_empty(), detail);
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture or a filter are accepted and ignored
    let tmp = TempDir::new().expect("temporary directory");
    let mut report = Report { lines: Vec::new() };
    squeezing_law(tmp.path(), &mut report);
    oracle(tmp.path(), &mut report);
    sql_values(&mut report);
    kunkel_floor(tmp.path(), &mut report);
    crosstalk_endpoint(tmp.path(), &mut report);
    gain_band(tmp.path(), &mut report);
    calibrations(tmp.path(), &mut report);
    properties(tmp.path(), &mut report);
    let failed = report.lines.iter().filter(|(ok, _)| !ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        report.lines.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
