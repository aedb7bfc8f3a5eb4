use bdris_harness::verify;

#[test]
fn oracle_suite_passes() {
    let checks = verify::run_suite(3, 1).unwrap();
    for check in &checks {
        println!("{check}");
    }
    assert!(checks.iter().all(|c| c.passed));
}

#[test]
fn verify_subcommand_exits_zero() {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_bdris"))
        .args(["verify", "--seed", "5"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}
