use std::process::Command;

fn bdris() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdris"))
}

#[test]
fn convergence_example_writes_one_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let status = bdris()
        .args(["convergence", "--seed", "7", "--trials", "1", "--values", "20", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("seed=7"));
    assert_eq!(lines.next().unwrap(), "snr_db,trial,outer_iter,wsr,elapsed_s");
    assert!(lines.all(|l| l.starts_with("20,0,")));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn default_output_honours_env() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.json");
    let mut cfg = bdris_core::model::default_config().with_dims(4, 4, 2);
    cfg.max_outer_iters = 3;
    std::fs::write(&config, serde_json::to_string(&cfg).unwrap()).unwrap();
    let status = bdris()
        .env("BDRIS_OUTPUT_DIR", dir.path())
        .args(["run", "--trials", "2", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("single.csv").exists());
}

#[test]
fn missing_config_names_the_path() {
    let output = bdris()
        .args(["run", "--config", "/nonexistent/bdris-config.json"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/nonexistent/bdris-config.json"), "{stderr}");
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut cfg = bdris_core::model::default_config();
    cfg.users = 0;
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let output = bdris().args(["run", "--config"]).arg(&path).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("K"));
}

#[test]
fn unknown_flag_and_bad_values_fail() {
    assert!(!bdris().args(["run", "--bogus"]).status().unwrap().success());
    assert!(!bdris().args(["sweep-n", "--values", "8.5", "--trials", "1"]).status().unwrap().success());
    assert!(!bdris().args(["run", "--trials", "0"]).status().unwrap().success());
}

#[test]
fn library_entry_point_reports_parse_errors() {
    assert_ne!(bdris_harness::cli::cli_main(["bdris", "nope"]), 0);
    assert_eq!(bdris_harness::cli::cli_main(["bdris", "--version"]), 0);
}
