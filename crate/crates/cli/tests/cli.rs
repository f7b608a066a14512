use std::path::Path;
use std::process::{Command, Output};

use ratchet_core::output::{self, parse_csv};

fn ratchet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(args)
        .env("RATCHET_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scaling_curve_has_401_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = ratchet(&[
        "scaling-curve",
        "--x-max",
        "20",
        "--steps",
        "401",
        "-o",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x,F,F_over_x\n"));
    let parsed = parse_csv(&text, output::SCALING_HEADER).unwrap();
    assert_eq!(parsed.rows.len(), 401);
    assert_eq!(parsed.rows[0][2], Some(0.5));
}

#[test]
fn standard_parameters_are_accepted() {
    let o = ratchet(&[
        "ratchet",
        "--phi-d",
        "1.8",
        "--epsilon",
        "0.18",
        "--ell",
        "1",
        "--gamma",
        "-1.5708",
        "--beta",
        "0.5",
        "--kicks",
        "40",
        "--engine",
        "quantum",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let parsed = parse_csv(&text, output::TRAJECTORY_HEADER).unwrap();
    assert_eq!(parsed.rows.len(), 41);
    assert!(parsed
        .comments
        .iter()
        .any(|c| c.contains("engine: quantum")));
}

#[test]
fn tau_scan_writes_metadata_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = ratchet(&[
        "tau-scan",
        "--taus",
        "0.3,3.14159,5.98",
        "--kicks",
        "10",
        "-o",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with('#'));
    let parsed = parse_csv(&text, output::GRID_HEADER).unwrap();
    assert_eq!(parsed.rows.len(), 30);
    assert!(parsed.comments.iter().any(|c| c.contains("seed")));

    // the same file through a general CSV reader
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 6);
    assert_eq!(rdr.records().count(), 30);
}

#[test]
fn tiny_basis_reports_leakage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = ratchet(&[
        "quantum",
        "--basis-halfwidth",
        "8",
        "--kicks",
        "40",
        "-o",
        path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("leakage"));
    // nothing left behind, not even the staging file
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_one() {
    let o = ratchet(&["ratchet", "--phi-d", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("phi-d must be positive"));

    let o = ratchet(&["ratchet", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--no-such-flag"));

    let o = ratchet(&["ratchet", "--epsilon", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("quantum"));

    let o = ratchet(&["collapse", "--combos", "1.8"]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(ratchet(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_three() {
    let o = ratchet(&[
        "scaling-curve",
        "--steps",
        "3",
        "-o",
        "/nonexistent-dir/curve.csv",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "phi_d = 0.9\nepsilon = 0.36\nkicks = 5\nformat = json\n",
    )
    .unwrap();
    let o = ratchet(&["ratchet", "--config", path_arg(&cfg), "--kicks", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["metadata"]["phi_d"], "0.9");
    assert_eq!(doc["records"].as_array().unwrap().len(), 4);

    std::fs::write(&cfg, "phi = 0.9\n").unwrap();
    let o = ratchet(&["ratchet", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("phi"));
}

#[test]
fn identical_specs_give_identical_bytes() {
    for args in [
        &["collapse", "--kicks", "12", "--monte-carlo", "--seed", "5"][..],
        &["tau-scan", "--taus", "0.3,2,6.4", "--kicks", "8"][..],
        &["energy-collapse", "--kicks", "6", "--format", "json"][..],
    ] {
        let a = ratchet(args);
        let b = Command::new(env!("CARGO_BIN_EXE_ratchet"))
            .args(args)
            .env("RATCHET_THREADS", "1")
            .output()
            .unwrap();
        assert!(a.status.success(), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn emitted_csvs_reparse() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    let dist = dir.path().join("d.csv");
    let o = ratchet(&[
        "quantum",
        "--kicks",
        "5",
        "--gamma-deg",
        "-90",
        "-o",
        path_arg(&traj),
        "--distribution",
        path_arg(&dist),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = parse_csv(
        &std::fs::read_to_string(&traj).unwrap(),
        output::TRAJECTORY_HEADER,
    )
    .unwrap();
    assert_eq!(t.column("scaled_current").unwrap()[0], None);
    let d = parse_csv(
        &std::fs::read_to_string(&dist).unwrap(),
        output::DISTRIBUTION_HEADER,
    )
    .unwrap();
    let q0: f64 = d
        .rows
        .iter()
        .filter(|r| r[0] == Some(0.0))
        .map(|r| r[2].unwrap())
        .sum();
    assert!((q0 - 1.0).abs() < 1e-9);

    for (args, header) in [
        (&["collapse", "--kicks", "5"][..], output::COLLAPSE_HEADER),
        (
            &["energy-collapse", "--kicks", "5"][..],
            output::ENERGY_HEADER,
        ),
        (
            &["ratchet", "--kicks", "5", "--mode", "physical"][..],
            output::TRAJECTORY_HEADER,
        ),
        (
            &["collapse", "--kicks", "5", "--engine", "pendulum"][..],
            output::COLLAPSE_HEADER,
        ),
    ] {
        let o = ratchet(args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        parse_csv(&String::from_utf8(o.stdout).unwrap(), header).unwrap();
    }
}
