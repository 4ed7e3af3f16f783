use std::path::{Path, PathBuf};

use robustdeg::engine::{theoretical_reuse_factor, RadiusGrid};
use robustdeg_cli::config::{emit_config, parse_config, parse_config_str};
use robustdeg_cli::output::CSV_HEADER;
use robustdeg_cli::run_command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["robustdeg"];
    argv.extend_from_slice(args);
    let code = run_command(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Small stable box experiment; the loop stays stable well past `b`.
fn small_config(n: usize, l: usize, seed: u64) -> String {
    format!(
        r#"{{
  "system": {{"builtin": "gsv_example"}},
  "uncertainty": {{"type": "lp_ball", "p": "inf", "dim": 3}},
  "grid": {{"a": 0.0, "b": 0.5, "l": {l}}},
  "sampling": {{"n": {n}}},
  "spec": {{"atoms": [{{"type": "stability"}}]}},
  "seed": {seed}
}}"#
    )
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn chernoff_config_resolves_sample_count() {
    let config = parse_config(&configs_dir().join("box_stability.json")).unwrap();
    assert_eq!(config.samples_per_radius().unwrap(), 26492);
    assert_eq!(config.radius_grid().unwrap().len(), 100);
}

#[test]
fn missing_grid_is_named() {
    let text = small_config(10, 5, 0).replace(r#""grid": {"a": 0.0, "b": 0.5, "l": 5},"#, "");
    let e = parse_config_str(&text).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("grid"), "{e}");
}

#[test]
fn unknown_field_reports_path() {
    let text = small_config(10, 5, 0).replace(r#""dim": 3"#, r#""dim": 3, "radius": 2"#);
    let e = parse_config_str(&text).unwrap_err().to_string();
    assert!(e.contains("uncertainty") && e.contains("line"), "{e}");
}

#[test]
fn non_decreasing_radii_rejected() {
    let text = small_config(10, 5, 0).replace(r#""a": 0.0, "b": 0.5, "l": 5"#, r#""radii": [1, 1, 0.5]"#);
    let e = parse_config_str(&text).unwrap_err().to_string();
    assert!(e.contains("radii must be strictly decreasing"), "{e}");
}

#[test]
fn example_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let config = parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = parse_config_str(&emit_config(&config)).unwrap();
        assert_eq!(config, again, "{}", path.display());
        seen += 1;
    }
    assert_eq!(seen, 5);
}

#[test]
fn factor_matches_library() {
    let (code, out, _) = run(&["factor", "--l", "100", "--a", "0", "--b", "1", "--d", "3"]);
    assert_eq!(code, 0);
    let expected = theoretical_reuse_factor(&RadiusGrid::linspace(0.0, 1.0, 100).unwrap(), 3);
    assert_eq!(out.trim().parse::<f64>().unwrap(), expected);
}

#[test]
fn factor_rejects_bad_grid() {
    let (code, _, err) = run(&["factor", "--l", "10", "--a", "2", "--b", "1", "--d", "3"]);
    assert_eq!(code, 1);
    assert!(err.contains("configuration error"));
}

#[test]
fn run_is_reproducible_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(&dir, "small.json", &small_config(60, 12, 5));
    let cfg = cfg.to_str().unwrap();
    let (c1, first, summary) = run(&["run", "--config", cfg]);
    let (c2, second, _) = run(&["run", "--config", cfg, "--workers", "3"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(first, second);
    assert!(summary.contains("reuse factor"));

    let mut lines = first.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 12);
    let grid = RadiusGrid::linspace(0.0, 0.5, 12).unwrap();
    for (row, r) in rows.iter().zip(grid.radii()) {
        assert_eq!(row.len(), 8);
        let parsed: f64 = row[0].parse().unwrap();
        assert!((parsed - r).abs() <= 5e-7 + 1e-6 * r.abs());
        // Stable everywhere on this range.
        assert_eq!(row[3], "1.000000");
        assert_eq!(row[5], "1.000000");
    }
    // The zero-radius row is exact and does not drag the bound down.
    let last = rows.last().unwrap();
    assert_eq!((last[4].as_str(), last[7].as_str()), ("1.000000", "1.000000"));
    let first_bound: f64 = rows[0][7].parse().unwrap();
    let first_low: f64 = rows[0][4].parse().unwrap();
    assert!(first_bound <= first_low && first_bound > 0.9);

    let (c3, other_seed, _) = run(&["run", "--config", cfg, "--seed", "6"]);
    assert_eq!(c3, 0);
    assert_eq!(other_seed.lines().count(), 13);
}

#[test]
fn baseline_uses_full_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(&dir, "small.json", &small_config(40, 6, 1));
    let (code, out, _) = run(&["baseline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    for line in out.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "40");
        assert_eq!(fields[6], "40");
    }
}

#[test]
fn run_writes_configured_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(&dir, "small.json", &small_config(30, 6, 2));
    let csv = dir.path().join("c.csv");
    let json = dir.path().join("r.json");
    let svg = dir.path().join("p.svg");
    let (code, out, _) = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 7);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["curve"]["points"].as_array().unwrap().len(), 6);
    assert!(doc["report"]["theoretical_factor"].as_f64().unwrap() >= 1.0);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn figures_are_nonincreasing() {
    let (code, out, _) = run(&["figures"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 5);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 200);
    for w in rows.windows(2) {
        assert_eq!(w[1][0], w[0][0] + 1.0);
        for c in 1..5 {
            assert!(w[1][c] <= w[0][c] + 1e-6, "column {c} rises at d = {}", w[1][0]);
            assert!(w[1][c] >= 1.0);
        }
    }
}

#[test]
fn exit_codes() {
    let (code, _, err) = run(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("cannot read"));

    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);

    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sampler-test"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(&dir, "small.json", &small_config(5, 3, 0));
    let unwritable = dir.path().join("missing-dir").join("out.csv");
    let (code, _, err) = run(&["run", "--config", cfg.to_str().unwrap(), "--out", unwritable.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("runtime error"));
}

#[test]
fn sampler_test_reports_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(&dir, "small.json", &small_config(5, 3, 0));
    let (code, out, err) = run(&["sampler-test", "--config", cfg.to_str().unwrap(), "--samples", "20000"]);
    assert_eq!(code, 0);
    assert!(err.contains("d = 3"));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,empirical,expected,sigma,z"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for row in &rows {
        assert!((row[2] - row[0].powi(3)).abs() < 1e-9);
        assert!(row[4].abs() < 5.0, "z = {}", row[4]);
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_robustdeg");
    let ok = std::process::Command::new(bin).args(["factor", "--l", "2", "--a", "1", "--b", "2", "--d", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim().parse::<f64>().unwrap(), 4.0 / 3.0);
    let bad = std::process::Command::new(bin).args(["run", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
