//! End-to-end tests running the built binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nopa-chain"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn nopa-chain")
}

fn tmpdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("nopa-chain-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn threshold_single_cell_matches_published_value() {
    let out = run(&["threshold", "--n", "2", "--scenarios", "none"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("2,lossless")).unwrap();
    let x: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((x - 0.4142135).abs() < 1e-6, "{x}");
    assert!(text.starts_with("# toolkit_version:"));
}

#[test]
fn invalid_chain_length_exits_2() {
    let out = run(&["threshold", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn unstable_spectrum_exits_4() {
    let out = run(&[
        "spectrum", "--n", "2", "--x", "0.5", "--omega-points", "3", "--omega-max", "1e6",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn identical_config_gives_byte_identical_outputs() {
    let d = tmpdir("determinism");
    let args = |stem: &str| {
        [
            "spectrum",
            "--n",
            "3",
            "--x",
            "0.2",
            "--losses",
            "both",
            "--omega-points",
            "50",
        ]
        .into_iter()
        .map(String::from)
        .chain([
            "--out-csv".into(),
            d.join(format!("{stem}.csv")).display().to_string(),
            "--out-json".into(),
            d.join(format!("{stem}.json")).display().to_string(),
        ])
        .collect::<Vec<_>>()
    };
    assert!(bin().args(args("a")).status().unwrap().success());
    assert!(bin().args(args("b")).status().unwrap().success());
    let csv_a = std::fs::read(d.join("a.csv")).unwrap();
    let csv_b = std::fs::read(d.join("b.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let json_a = std::fs::read(d.join("a.json")).unwrap();
    let json_b = std::fs::read(d.join("b.json")).unwrap();
    assert_eq!(json_a, json_b);
    // provenance embedded
    let text = String::from_utf8(json_a).unwrap();
    assert!(text.contains("\"toolkit_version\""));
    assert!(text.contains("\"n_nopas\": 3"));
}

#[test]
fn config_file_feeds_flags_and_cli_overrides() {
    let d = tmpdir("config");
    let cfg_path = d.join("run.conf");
    std::fs::write(
        &cfg_path,
        "# spectrum of the two-NOPA chain\nn = 2\nx = 0.3\nlosses = transmission\nomega-points = 4\nomega-max = 1e8\npaper-precision = true\n",
    )
    .unwrap();
    let out = run(&["spectrum", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3 + 4); // 2 metadata + header + 4 rows
    // paper-precision renders dB at 4 decimals
    let first_row = text.lines().nth(3).unwrap();
    let db_col = first_row.split(',').nth(6).unwrap();
    assert_eq!(db_col.split('.').nth(1).unwrap().len(), 4);

    // explicit flag overrides the file value
    let out = run(&[
        "spectrum",
        "--config",
        cfg_path.to_str().unwrap(),
        "--omega-points",
        "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3 + 2);
}

#[test]
fn trajectory_sample_count_matches_grid_arithmetic() {
    let d = tmpdir("trajectory");
    let csv = d.join("traj.csv");
    let out = run(&[
        "trajectory",
        "--n",
        "2",
        "--x",
        "0.22",
        "--t-end",
        "2e-8",
        "--dt",
        "1e-10",
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("t_s"))
        .collect();
    assert_eq!(rows.len(), 201); // t = 0 .. 2e-8 inclusive at 1e-10
    let header = text.lines().find(|l| l.starts_with("t_s")).unwrap();
    assert!(header.contains("E_a1_b1") && header.contains("E_a_c_b_c"));
}

#[test]
fn negativity_sync_check_passes_for_published_operating_point() {
    // x_2 = sqrt(3) * 0.13
    let out = run(&[
        "negativity", "--n", "2", "--x", "0.22516660498395403", "--sync-check",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("a2,b1")).unwrap();
    let e: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((e - 0.4850).abs() < 5e-4, "{e}");
}

#[test]
fn sweep_target_db_reproduces_pump_column() {
    let out = run(&["sweep", "--kind", "target-db", "--n", "2", "--target", "-25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("2,lossless")).unwrap();
    let x: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((x - 0.3978).abs() < 5e-5, "{x}");
    // the lossy rows carry the same pump
    let row_t = text
        .lines()
        .find(|l| l.starts_with("2,transmission_only"))
        .unwrap();
    assert_eq!(row.split(',').nth(2), row_t.split(',').nth(2));
}

#[test]
fn sweep_rejects_unknown_kind() {
    let out = run(&["sweep", "--kind", "frobnicate", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dde_check_reports_stability_json() {
    let out = run(&[
        "dde-check", "--n", "2", "--x", "0.2251666", "--losses", "both",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("dde-check emits JSON");
    assert_eq!(parsed["result"]["stable"], true);
    assert_eq!(parsed["result"]["converged"], true);
    assert!(parsed["result"]["rightmost_root"]["re"].as_f64().unwrap() < 0.0);
}

#[test]
fn index_maps_json_shape() {
    let out = run(&["index-maps", "--n", "2"]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["state"].as_array().unwrap().len(), 8);
    assert_eq!(parsed["input"].as_array().unwrap().len(), 16);
    assert_eq!(parsed["input"][12], "xi_BS_a_q[1]");
}

#[test]
fn delayed_spectrum_matches_delay_free_at_low_frequency_scale() {
    // one low-frequency point, delayed vs free, should agree to ~1e-2 dB
    let base = [
        "spectrum", "--n", "2", "--x", "0.2251666", "--losses", "both", "--omega-points", "1",
        "--omega-min", "1e4",
    ];
    let free = run(&base);
    assert!(free.status.success());
    let mut delayed_args = base.to_vec();
    delayed_args.push("--delay");
    let delayed = run(&delayed_args);
    assert!(delayed.status.success(), "{}", String::from_utf8_lossy(&delayed.stderr));
    let db_of = |raw: &[u8]| -> f64 {
        String::from_utf8_lossy(raw)
            .lines()
            .nth(3)
            .unwrap()
            .split(',')
            .nth(6)
            .unwrap()
            .parse()
            .unwrap()
    };
    let d = (db_of(&free.stdout) - db_of(&delayed.stdout)).abs();
    assert!(d < 1e-2, "delayed vs free at 1e4 rad/s differ by {d} dB");
}
