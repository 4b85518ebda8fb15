use std::process::Command;

fn wingvol(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wingvol")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn price_and_iv_round_trip() {
    let (code, out, _) = wingvol(&["price", "--sigma", "0.2", "--strike", "1.1"]);
    assert_eq!(code, 0);
    let price = out.trim().to_string();
    let (code, out, _) = wingvol(&["iv", "--strike", "1.1", "--price", &price]);
    assert_eq!(code, 0);
    assert!((out.trim().parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(wingvol(&["frobnicate"]).0, 2);
    assert_eq!(wingvol(&["price", "--strike", "1"]).0, 2);
    let (code, _, err) = wingvol(&["experiment", "--scenario", "nope"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown scenario"));
    assert_eq!(wingvol(&["experiment", "--scenario", "bs-sanity", "--set", "ladder.count=3"]).0, 2);
}

#[test]
fn validate_bundled_fixture() {
    let (code, out, _) = wingvol(&["validate"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("verdict: PASS\n"));
}

#[test]
fn validate_rejects_arbitrage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "expiry,strike,price\n1,0.9,0.15\n1,1.0,0.02\n1,1.1,0.03\n1,1.2,0.01\n").unwrap();
    let (code, out, _) = wingvol(&["validate", "--surface", path.to_str().unwrap(), "--r", "0"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("Convexity: Fail"));
}

#[test]
fn experiment_honours_config_overrides_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "scenario = bs-sanity\nsigma = 0.3\nladder.count = 9\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wingvol"))
        .args(["experiment", "--config", cfg.to_str().unwrap(), "--set", "sigma=0.25"])
        .env("WINGVOL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.path().join("bs-sanity.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "logK,exact,approx,abs_err,err_order,norm_err");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("10,0.25,"));
}

#[test]
fn wing_prints_csv() {
    let (code, out, _) = wingvol(&["wing", "--curve", "pareto", "--from", "10", "--to", "40", "--count", "4"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 5);
    assert!(out.starts_with("logK,exact_iv,wing_iv,refined_iv,error_order\n"));
}
