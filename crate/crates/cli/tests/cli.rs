use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

use nematic_cli::{run, Invocation, Manifest, Profile, Scenario, MANIFEST_FILE};

fn write_config(dir: &Path, value: Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec(&value).unwrap()).unwrap();
    path
}

fn small_gain_map() -> Value {
    json!({
        "experiment": {"shots": 12, "sim": {"n_traj": 200}},
        "grid": {"n_alpha": 7, "thetas": [0.4, 2.0]},
        "time_scan": {"enabled": false},
        "polar_baseline": true
    })
}

fn invocation(
    scenario: Scenario,
    config: Option<std::path::PathBuf>,
    out: &Path,
    workers: usize,
) -> Invocation {
    Invocation {
        scenario,
        config,
        out: out.to_path_buf(),
        seed: Some(11),
        workers: Some(workers),
        profile: Some(Profile::Fast),
    }
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn outputs_are_bit_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), small_gain_map());
    let runs: Vec<_> = [1, 4, 16]
        .iter()
        .map(|&w| {
            let out = tmp.path().join(format!("w{w}"));
            run(&invocation(
                Scenario::GainMap,
                Some(config.clone()),
                &out,
                w,
            ))
            .unwrap();
            read_manifest(&out)
        })
        .collect();
    assert!(runs[0].files.len() >= 4);
    for m in &runs[1..] {
        assert_eq!(m.files, runs[0].files);
        assert_eq!(m.config, runs[0].config);
    }
}

#[test]
fn manifest_replays_to_identical_checksums() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        json!({"sim": {"n_traj": 300, "record_times": [0.0, 0.01, 0.02], "t_end": 0.02}}),
    );
    let first = tmp.path().join("first");
    run(&invocation(Scenario::SqueezeScan, Some(config), &first, 2)).unwrap();
    let again = tmp.path().join("again");
    let replay = Invocation {
        scenario: Scenario::SqueezeScan,
        config: Some(first.join(MANIFEST_FILE)),
        out: again.clone(),
        seed: None,
        workers: Some(3),
        profile: None,
    };
    run(&replay).unwrap();
    let (a, b) = (read_manifest(&first), read_manifest(&again));
    assert_eq!(a.seed, b.seed);
    assert_eq!(a.profile, b.profile);
    assert_eq!(a.config, b.config);
    assert_eq!(a.files, b.files);
}

#[test]
fn manifest_for_another_scenario_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let config = write_config(tmp.path(), json!({"n_values": [100, 200], "shots": 20}));
    run(&invocation(Scenario::DetectCalib, Some(config), &first, 1)).unwrap();
    let err = run(&invocation(
        Scenario::RfCalib,
        Some(first.join(MANIFEST_FILE)),
        &tmp.path().join("b"),
        1,
    ))
    .unwrap_err();
    assert_eq!(err.exit_code(), nematic_cli::EXIT_CONFIG);
}

fn simulate(args: &[&str], workers_env: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_simulate"));
    cmd.args(args).env_remove("NEMATIC_WORKERS");
    if let Some(w) = workers_env {
        cmd.env("NEMATIC_WORKERS", w);
    }
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let (code, _) = simulate(&["--help"], None);
    assert_eq!(code, 0);
    let (code, _) = simulate(&["no-such-scenario", "--out", out], None);
    assert_eq!(code, 1);
    let bad = write_config(tmp.path(), json!({"shots": 20, "bogus": 1}));
    let (code, err) = simulate(
        &[
            "detect-calib",
            "--out",
            out,
            "--config",
            bad.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code, 1, "{err}");
    let invalid = write_config(tmp.path(), json!({"shots": 1}));
    let (code, _) = simulate(
        &[
            "detect-calib",
            "--out",
            out,
            "--config",
            invalid.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code, 1);
    // a regular file where the output directory should go
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, b"x").unwrap();
    let small = write_config(tmp.path(), json!({"n_values": [100], "shots": 10}));
    let target = blocker.join("sub");
    let (code, err) = simulate(
        &[
            "detect-calib",
            "--out",
            target.to_str().unwrap(),
            "--config",
            small.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code, 2, "{err}");
}

#[test]
fn workers_from_environment() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), json!({"n_values": [100], "shots": 10}));
    let out = tmp.path().join("env");
    let args = [
        "detect-calib",
        "--out",
        out.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ];
    let (code, err) = simulate(&args, Some("2"));
    assert_eq!(code, 0, "{err}");
    assert_eq!(read_manifest(&out).workers, 2);
    let (code, _) = simulate(&args, Some("zero"));
    assert_eq!(code, 1);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--workers", "3"]);
    let (code, _) = simulate(&with_flag, Some("zero"));
    assert_eq!(code, 0);
    assert_eq!(read_manifest(&out).workers, 3);
}
