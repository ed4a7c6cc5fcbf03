use std::process::Command;

fn tsr(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tsr"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn mc_writes_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.csv");
    let out = tsr(&[
        "mc",
        "--n",
        "128",
        "--m-over-n",
        "0.5",
        "--trials",
        "3",
        "--t-max",
        "4",
        "--algorithms",
        "tsr-dft,amp-dft",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "algorithm,iteration,mean_mse_db,stderr_db,se_pred_mse_db"
    );
    assert_eq!(lines.len(), 1 + 2 * 4);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "n = 256\nm_over_n = 0.6\ntrials = 2\nt_max = 3\nlambda = 0.2\n",
    )
    .unwrap();
    let out = tsr(&[
        "mc",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "128",
        "--format",
        "json",
        "--algorithms",
        "tsr-dft",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["resolved"]["n"], 128);
    assert_eq!(json["resolved"]["m"], 77);
    assert_eq!(json["config"]["lambda"], 0.2);
}

#[test]
fn conflicting_flags_are_rejected() {
    let out = tsr(&["mc", "--snr-db", "20", "--sigma2", "0.1"]);
    assert!(!out.status.success());
}

#[test]
fn recover_and_se_emit_traces() {
    let out = tsr(&[
        "recover",
        "--n",
        "128",
        "--t-max",
        "5",
        "--algorithms",
        "tsr-dft",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).starts_with("algorithm,iteration,mse_db,clamp_events"));

    let out = tsr(&["se", "--n", "1000", "--t-max", "10", "--format", "json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert!(json["rows"].as_array().unwrap().len() >= 2);
}

#[test]
fn fixed_point_scan_reports_small_residuals() {
    let out = tsr(&[
        "fixed-point",
        "--n",
        "1000",
        "--ratios",
        "0.5,0.7",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for row in json.as_array().unwrap() {
        assert!(row["residual"].as_f64().unwrap() < 1e-8);
    }
}

const SMALL_GRID: &str = r#"
denoiser_sparsities = [0.4, 1.0]
eta_grid = [0.01, 1.0, 100.0, 10000.0]
derivative_points = [[0.4, 1.0]]
se_sparsities = [0.4]
ratios = [0.7]
noise_variances = [0.01]
dominance_t_max = 10
"#;

#[test]
fn check_exit_status_follows_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, SMALL_GRID).unwrap();
    let out = tsr(&["check", "--grid", good.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("0 failed"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, format!("{SMALL_GRID}mmse_scale = 1.1\n")).unwrap();
    let out = tsr(&["check", "--grid", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL mmse-upper-bound"));
}
