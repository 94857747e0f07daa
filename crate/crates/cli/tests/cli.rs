use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpr-lab"))
        .args(args)
        .env("CPR_LAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json_rows(args: &[&str]) -> (Value, Vec<Value>) {
    let mut full = args.to_vec();
    full.extend(["--format", "json", "--no-timestamp"]);
    let out = lab(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records: Vec<Value> = serde_json::from_slice(&out.stdout).expect("a JSON array");
    let (head, rows) = records.split_first().expect("provenance record");
    assert_eq!(head["record"], "provenance");
    assert!(rows.iter().all(|r| r["record"] == "row"));
    (head.clone(), rows.to_vec())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn ripcheck_json_is_an_array_with_the_resolved_config() {
    let (head, rows) = json_rows(&["ripcheck", "--n", "24", "--k", "2", "--samples", "300"]);
    assert_eq!(head["command"], "ripcheck");
    assert_eq!(head["config"]["samples"], 300);
    assert_eq!(head["config"]["seed"], 20_240_101);
    assert!(head.get("generated_at_unix").is_none());
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    let m_expected = (6.0 * 2.0 * (24.0f64 / 2.0).ln()).ceil() as u64;
    assert_eq!(r["m"], m_expected);
    assert!(f(&r["lower_ratio"]) <= f(&r["mean_ratio"]) && f(&r["mean_ratio"]) <= f(&r["upper_ratio"]));
    let inside = f(&r["lower_ratio"]) >= 0.12 && f(&r["upper_ratio"]) <= 2.45;
    assert_eq!(r["inside_paper_band"], inside);
}

#[test]
fn timestamps_appear_unless_disabled() {
    let out = lab(&["ripcheck", "--n", "8", "--k", "1", "--samples", "10", "--format", "json"]);
    let records: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(records[0]["generated_at_unix"].as_u64().unwrap() > 0);
}

#[test]
fn flags_override_the_config_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 20, "k": 2, "samples": 50, "seed": 7}"#).unwrap();
    let path = cfg.to_str().unwrap();
    let (head, rows) = json_rows(&["ripcheck", "--config", path, "--k", "3"]);
    assert_eq!(head["config"]["n"], 20);
    assert_eq!(head["config"]["k"], 3);
    assert_eq!(head["config"]["seed"], 7);
    assert_eq!(rows[0]["samples"], 50);
    // Multiplier falls through to its default.
    assert_eq!(rows[0]["m"], (6.0 * 3.0 * (20.0f64 / 3.0).ln()).ceil() as u64);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 20, "sampels": 50}"#).unwrap();
    let out = lab(&["ripcheck", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_with_code_two() {
    for args in [
        &["sweep-pt", "--trials", "0"][..],
        &["recover", "--n", "8", "--k", "9"],
        &["ripcheck", "--m-grid", "0,4"],
        &["sweep-noise", "--epsilon-grid", "-1"],
        &["lemmas", "--svg", "x.svg"],
        &["lemmas", "--samples", "10"],
    ] {
        let out = lab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let out = lab(&["ripcheck", "--n", "8", "--k", "1", "--samples", "10", "--out", "/nonexistent/dir/r.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn broken_lemma_tolerance_gives_a_nonzero_exit() {
    let small = ["lemmas", "--samples", "1000", "--trials", "20", "--no-timestamp"];
    let ok = lab(&small);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let mut broken = small.to_vec();
    broken.extend(["--tolerance-scale", "0"]);
    let out = lab(&broken);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn lemma22_rows_carry_the_closed_form() {
    let (_, rows) = json_rows(&["lemmas", "--samples", "1000", "--trials", "20"]);
    let l22: Vec<&Value> = rows.iter().filter(|r| r["check"] == "lemma22").collect();
    assert_eq!(l22.len(), 5);
    for r in l22 {
        let t = f(&r["parameter"]);
        let want = 2.0 * (1.0 + t * t) / (1.0 - t);
        assert!((f(&r["closed_form"]) - want).abs() <= 1e-15 * want);
        assert_eq!(r["samples"], 1000);
    }
    assert_eq!(rows.iter().filter(|r| r["check"] == "xi_band").count(), 21);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn ripcheck_spread_tightens_as_m_grows() {
    let (n, k) = (32usize, 2usize);
    let m0 = (2.0 * k as f64 * (n as f64 / k as f64).ln()).ceil() as usize;
    let grid: Vec<String> = [1, 2, 4, 8].iter().map(|s| (s * m0).to_string()).collect();
    let grid = grid.join(",");
    let (_, rows) = json_rows(&["ripcheck", "--n", "32", "--k", "2", "--samples", "1500", "--m-grid", &grid]);
    let spreads: Vec<f64> = rows.iter().map(|r| f(&r["spread"])).collect();
    assert_eq!(spreads.len(), 4);
    let tightened = spreads.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(tightened >= 2, "{spreads:?}");
    assert!(spreads[3] < spreads[0], "{spreads:?}");
}

#[test]
fn csv_floats_round_trip() {
    let out = lab(&["ripcheck", "--n", "16", "--k", "2", "--samples", "100", "--no-timestamp"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), row.len());
    assert_eq!(&header[..6], &["n", "m", "k", "seed", "samples", "lower_ratio"]);
    let (_, rows) = json_rows(&["ripcheck", "--n", "16", "--k", "2", "--samples", "100"]);
    for (name, cell) in header.iter().zip(&row) {
        if let Some(x) = rows[0][*name].as_f64().filter(|_| rows[0][*name].is_f64()) {
            assert_eq!(cell.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{name}");
        }
    }
    assert!(csv.contains("# command: ripcheck"));
}

#[test]
fn noise_errors_grow_about_linearly() {
    let (_, rows) = json_rows(&[
        "sweep-noise",
        "--n",
        "24",
        "--k",
        "2",
        "--m",
        "150",
        "--trials",
        "6",
        "--epsilon-grid",
        "0.01,0.1,1",
    ]);
    assert_eq!(rows.len(), 3);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (f(&r["epsilon"]).ln(), f(&r["mean_dist"]).ln())).collect();
    assert!(pts.windows(2).all(|w| w[1].1 > w[0].1), "{pts:?}");
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((0.5..=1.5).contains(&slope), "slope {slope}");
    for r in &rows {
        assert_eq!(r["bound_satisfied"], true);
        assert!((f(&r["c"]) - 0.12).abs() < 1e-15 && (f(&r["C"]) - 2.45).abs() < 1e-15);
    }
}

#[test]
fn noise_sweep_takes_constants_from_a_ripcheck_report() {
    let dir = tempfile::tempdir().unwrap();
    let rip = dir.path().join("rip.csv");
    let out = lab(&["ripcheck", "--n", "24", "--k", "2", "--samples", "400", "--out", rip.to_str().unwrap()]);
    assert!(out.status.success());
    let (_, rip_rows) = json_rows(&["ripcheck", "--n", "24", "--k", "2", "--samples", "400"]);
    let (head, rows) = json_rows(&[
        "sweep-noise",
        "--n",
        "24",
        "--k",
        "2",
        "--m",
        "150",
        "--trials",
        "2",
        "--epsilon-grid",
        "0.1",
        "--rip-report",
        rip.to_str().unwrap(),
    ]);
    assert_eq!(head["config"]["constants_source"]["source"], "rip_report");
    assert_eq!(f(&rows[0]["c"]).to_bits(), f(&rip_rows[0]["lower_ratio"]).to_bits());
    assert_eq!(f(&rows[0]["C"]).to_bits(), f(&rip_rows[0]["upper_ratio"]).to_bits());
    let both = lab(&["sweep-noise", "--rip-report", rip.to_str().unwrap(), "--paper-constants"]);
    assert_eq!(both.status.code(), Some(2));
}

fn recover_row(extra: &[&str]) -> Value {
    let mut args = vec!["recover", "--n", "24", "--k", "2", "--m", "120", "--seed", "3"];
    args.extend(extra);
    json_rows(&args).1.remove(0)
}

#[test]
fn saved_ensembles_reproduce_the_run() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["e.json", "e.bin"] {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let a = recover_row(&["--save-ensemble", p]);
        assert!(Path::new(p).exists());
        let b = recover_row(&["--ensemble", p]);
        for key in ["relative_error", "dist_matrix", "objective", "iterations", "m", "n"] {
            assert_eq!(a[key], b[key], "{name}: {key}");
        }
    }
    let plain = recover_row(&[]);
    assert_eq!(plain["success"], true);
    assert_eq!(plain["init"], "spectral_sparse");
}

#[test]
fn svg_charts_are_written_for_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("pt.svg");
    let out = lab(&[
        "sweep-pt",
        "--n",
        "16",
        "--k-grid",
        "1,2",
        "--multiplier-grid",
        "4,8",
        "--trials",
        "3",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert!(text.contains("k=1") && text.contains("k=2"));
}

#[test]
fn phase_transition_rows_are_sorted_and_mostly_monotone() {
    let (_, rows) = json_rows(&[
        "sweep-pt",
        "--n",
        "32",
        "--k-grid",
        "3,2",
        "--multiplier-grid",
        "10,2,4,6,8",
        "--trials",
        "12",
    ]);
    let keys: Vec<(u64, u64)> = rows.iter().map(|r| (r["k"].as_u64().unwrap(), r["m"].as_u64().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for k in [2, 3] {
        let rates: Vec<f64> = rows.iter().filter(|r| r["k"] == k).map(|r| f(&r["success_rate"])).collect();
        let inversions = rates.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(inversions <= 1, "k={k}: {rates:?}");
    }
}

#[test]
fn dense_sampling_recovers_almost_always() {
    let (_, rows) = json_rows(&["sweep-pt", "--n", "16", "--k-grid", "2", "--m-grid", "256", "--trials", "50"]);
    assert!(f(&rows[0]["success_rate"]) >= 0.98, "{}", rows[0]);
}
