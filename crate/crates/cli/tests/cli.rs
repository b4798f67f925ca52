//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bevplan"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bevplan_cli_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Small budget so CLI tests stay quick.
const FAST: &[&str] = &[
    "--config",
    "optimizer.samples=16",
    "--config",
    "optimizer.constraint_elites=8",
    "--config",
    "optimizer.elites=4",
    "--config",
    "optimizer.iterations=2",
    "--config",
    "kernel.samples=16",
];

#[test]
fn empty_variant_list_fails_with_error_prefix() {
    let out = bin()
        .args([
            "run",
            "--scenario",
            scenario_path("static_block.scn").to_str().unwrap(),
            "--variant",
            "",
            "--seeds",
            "0",
            "--out",
            temp_dir("novariant").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.lines().any(|l| l.starts_with("error:")),
        "stderr: {stderr}"
    );
}

#[test]
fn unknown_config_key_fails() {
    let out = bin()
        .args([
            "validate-config",
            "--scenario",
            scenario_path("cutin.scn").to_str().unwrap(),
            "--config",
            "bogus.key=1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn validate_config_prints_effective_settings() {
    let out = bin()
        .args([
            "validate-config",
            "--scenario",
            scenario_path("overtake.scn").to_str().unwrap(),
            "--config",
            "limits.r_safe=2.75",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("limits.r_safe = 2.75"));
    assert!(stdout.contains("limits.y_ub = 5.25"));
}

#[test]
fn run_writes_rows_traces_and_reruns_byte_identical() {
    let dir = temp_dir("run3");
    let mut args = vec![
        "run".to_string(),
        "--scenario".into(),
        scenario_path("static_block.scn").to_str().unwrap().into(),
        "--variant".into(),
        "uap".into(),
        "--seeds".into(),
        "0..3".into(),
        "--out".into(),
        dir.to_str().unwrap().into(),
    ];
    args.extend(FAST.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let metrics = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4, "header + 3 rows:\n{metrics}");
    for seed in 0..3 {
        assert!(dir
            .join("traces")
            .join(format!("static_block_uap_{seed}.jsonl"))
            .exists());
    }
    assert!(dir.join("summary.txt").exists());
    assert!(dir.join("effective_config_static_block.txt").exists());

    // rerun into a fresh directory: byte-identical metrics
    let dir2 = temp_dir("run3b");
    let mut args2 = args.clone();
    let out_pos = args2.iter().position(|a| a == "--out").unwrap();
    args2[out_pos + 1] = dir2.to_str().unwrap().into();
    let out2 = bin().args(&args2).output().unwrap();
    assert!(out2.status.success());
    let metrics2 = std::fs::read_to_string(dir2.join("metrics.csv")).unwrap();
    assert_eq!(metrics, metrics2);
}

#[test]
fn calibrate_noise_fits_and_rejects_missing_columns() {
    // produce traces first
    let dir = temp_dir("calib");
    let mut args = vec![
        "run".to_string(),
        "--scenario".into(),
        scenario_path("abrupt_stop.scn").to_str().unwrap().into(),
        "--variant".into(),
        "uap".into(),
        "--seeds".into(),
        "0..2".into(),
        "--out".into(),
        dir.to_str().unwrap().into(),
    ];
    args.extend(FAST.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let model_dir = temp_dir("calib_model");
    let traces: Vec<String> = (0..2)
        .map(|s| {
            dir.join("traces")
                .join(format!("abrupt_stop_uap_{s}.jsonl"))
                .to_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let out = bin()
        .arg("calibrate-noise")
        .args(&traces)
        .args(["--out", model_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model_text = std::fs::read_to_string(model_dir.join("error_model.txt")).unwrap();
    let model = bevplan_core::ErrorModel::<f64>::from_text(&model_text).unwrap();
    assert_eq!(model.frames(), 5);
    assert!(model_dir.join("error_stats.csv").exists());

    // corrupt a trace: strip the d_gt arrays
    let broken_dir = temp_dir("calib_broken");
    let records = bevplan_sim::trace::read_jsonl(Path::new(&traces[0])).unwrap();
    let broken: Vec<_> = records
        .into_iter()
        .map(|mut r| {
            r.d_gt = None;
            r
        })
        .collect();
    let broken_path = broken_dir.join("broken.jsonl");
    bevplan_sim::trace::write_jsonl(&broken_path, &broken).unwrap();
    let out = bin()
        .arg("calibrate-noise")
        .arg(broken_path.to_str().unwrap())
        .args(["--out", broken_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn ablate_barrier_emits_four_rows_and_rejects_overtaking() {
    let dir = temp_dir("ablate");
    let mut args = vec![
        "ablate-barrier".to_string(),
        "--scenario".into(),
        scenario_path("static_block.scn").to_str().unwrap().into(),
        "--seeds".into(),
        "0..2".into(),
        "--out".into(),
        dir.to_str().unwrap().into(),
    ];
    args.extend(FAST.iter().map(|s| s.to_string()));
    let out = bin().args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "header + 4 rows:\n{csv}");

    let out = bin()
        .args([
            "ablate-barrier",
            "--scenario",
            scenario_path("overtake.scn").to_str().unwrap(),
            "--seeds",
            "0",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}
