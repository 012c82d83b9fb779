use std::fs;
use std::process::{Command, Output};

fn fppvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fppvar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn phi_at_one_prints_one() {
    let out = fppvar(&["phi", "--u", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("1.0"), "{text}");
    assert!((text.trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn phi_outside_domain_exits_2() {
    let out = fppvar(&["phi", "--u", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));
    assert_eq!(fppvar(&["phi", "--u", "-0.5"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fppvar(&["bogus"]).status.code(), Some(2));
    assert_eq!(fppvar(&["phi"]).status.code(), Some(2));
    assert_eq!(
        fppvar(&["psi", "--dist", "weibull:k=2", "--y", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(fppvar(&["averaging", "--m", "2"]).status.code(), Some(2));
}

#[test]
fn linear_function_is_tight() {
    let out = fppvar(&["verify-poincare", "--function", "linear-1d", "--mode", "quad"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report["margin"].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(report["holds"], true);
    assert_eq!(report["method"], "quad");
    assert!(report["continuous_terms"].is_array());
}

#[test]
fn monte_carlo_mode_reports_standard_errors() {
    let out = fppvar(&[
        "verify-poincare",
        "--function",
        "bit-plus-gauss",
        "--mode",
        "mc",
        "--samples",
        "20000",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report["lhs_stderr"].as_f64().unwrap() > 0.0);
    assert_eq!(report["method"], "mc");
}

#[test]
fn neargamma_reports_verdict() {
    let out = fppvar(&["check-neargamma", "--dist", "exp:rate=1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["distribution"], "exp:rate=1");
}

#[test]
fn averaging_eval_and_verify() {
    let out = fppvar(&["averaging", "--m", "2", "--eval", "0000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "0");
    let out = fppvar(&["averaging", "--m", "2", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["holds"], true);
}

#[test]
fn fpp_run_is_deterministic() {
    let args = [
        "fpp",
        "run",
        "--d",
        "2",
        "--n",
        "8",
        "--dist",
        "exp:rate=1",
        "--seed",
        "11",
    ];
    let a = fppvar(&args);
    let b = fppvar(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report = json(&a);
    assert!(report["distance"].as_f64().unwrap() > 0.0);
    assert!(!report["geodesic_edges"].as_array().unwrap().is_empty());
}

#[test]
fn response_curve_is_csv() {
    let run = json(&fppvar(&["fpp", "run", "--n", "6", "--seed", "5"]));
    let edge = run["geodesic_edges"][0].as_u64().unwrap().to_string();
    let out = fppvar(&[
        "fpp", "response", "--n", "6", "--seed", "5", "--edge", &edge, "--points", "9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,distance"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (y, d) = l.split_once(',').unwrap();
            (y.parse().unwrap(), d.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.windows(2).all(|w| w[1].1 >= w[0].1));
}

#[test]
fn sweep_writes_csv_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = fppvar(&[
        "fpp",
        "sweep",
        "--dist",
        "exp:rate=1",
        "--d",
        "2",
        "--ns",
        "4,6,8",
        "--samples",
        "100",
        "--seed",
        "9",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,samples,mean,var,se_var,mean_over_n,var_over_n,var_logn_over_n,seed")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(
        &config,
        "# defaults\nn = 6\nseed=7\n\ndist=exp:rate=1\nverify=true\nunused=3\n",
    )
    .unwrap();
    let config = config.to_str().unwrap();

    let from_config = json(&fppvar(&["--config", config, "fpp", "run"]));
    let explicit = json(&fppvar(&["fpp", "run", "--n", "6", "--seed", "7"]));
    assert_eq!(from_config, explicit);

    let overridden = json(&fppvar(&["--config", config, "fpp", "run", "--seed", "8"]));
    let expected = json(&fppvar(&["fpp", "run", "--n", "6", "--seed", "8"]));
    assert_eq!(overridden, expected);
    assert_ne!(overridden, from_config);

    let out = fppvar(&["averaging", "--m", "2", "--config", config]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["m"], 2);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "n 6\n").unwrap();
    assert_eq!(
        fppvar(&["--config", config.to_str().unwrap(), "phi", "--u", "0.5"])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.cfg");
    assert_eq!(
        fppvar(&["--config", missing.to_str().unwrap(), "phi", "--u", "0.5"])
            .status
            .code(),
        Some(2)
    );
}
