use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tlm-forge"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn tlm-forge")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing number `{key}` in {v}"))
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_closed_form_ladder_sweep() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["simulate", "--out", "measurements.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    assert!((num(&report, "deembed_ohm") - 21.8240).abs() < 1e-4);
    assert_eq!(report["n_points"], 6);

    let text = std::fs::read_to_string(dir.path().join("measurements.csv")).unwrap();
    assert!(text.starts_with("length_um,resistance_ohm\n"));
    assert!(!text.contains('\r'));
    let data = rows(&dir.path().join("measurements.csv"));
    assert_eq!(data.len(), 6);
    assert_eq!(data[0][0], 3.5);
    assert_eq!(data[5][0], 14.0);
    assert!((data[5][1] - 22.9104).abs() < 1e-3);
    let deembed = rows(&dir.path().join("deembed.csv"));
    assert_eq!(deembed.len(), 1);
}

#[test]
fn simulate_oracle_rows_track_closed_form() {
    let dir = TempDir::new().unwrap();
    let cf = run(dir.path(), &["simulate", "--out", "cf.csv"]);
    assert_eq!(cf.status.code(), Some(0));
    let sub = dir.path().join("oracle");
    std::fs::create_dir(&sub).unwrap();
    let or = run(dir.path(), &["simulate", "--source", "oracle", "--out", "oracle/m.csv"]);
    assert_eq!(or.status.code(), Some(0), "{}", stderr(&or));
    let a = rows(&dir.path().join("cf.csv"));
    let b = rows(&sub.join("m.csv"));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[0], y[0]);
        assert!(((x[1] - y[1]) / x[1]).abs() < 1e-2, "{} vs {}", x[1], y[1]);
    }
    let d = rows(&sub.join("deembed.csv"))[0][0];
    assert!(((d - 21.8240) / 21.8240).abs() < 1e-3);
}

#[test]
fn simulate_without_geometries_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["simulate", "--set", "sweep_count=0", "--out", "m.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));
    assert_eq!(std::fs::read_to_string(dir.path().join("m.csv")).unwrap(), "length_um,resistance_ohm\n");
    assert_eq!(json(&out)["n_points"], 0);
}

#[test]
fn simulate_then_extract_round_trip() {
    for flavor in ["hr-ltlm", "hr-rtlm"] {
        let dir = TempDir::new().unwrap();
        let sim = run(dir.path(), &["simulate", "--flavor", flavor, "--out", "m.csv"]);
        assert_eq!(sim.status.code(), Some(0), "{}", stderr(&sim));
        let args = ["extract", "m.csv", "--flavor", flavor, "--deembed", "deembed.csv", "--out", "report.json"];
        let ext = run(dir.path(), &args);
        assert_eq!(ext.status.code(), Some(0), "{flavor}: {}", stderr(&ext));
        let report = json(&ext);
        let rho = num(&report, "rho_c_ohm_cm2");
        if flavor == "hr-ltlm" {
            assert!(((rho - 1.1e-9) / 1.1e-9).abs() <= 1e-9, "{rho:e}");
        } else {
            // closed-form totals against the oracle de-embed: only the slope carries over
            assert!((num(&report, "slope_ohm_per_um") - 9.0).abs() < 1e-9);
            assert!(rho > 0.0);
        }
        assert!((num(&report, "rho_c_ohm_m2") / rho - 1e-4).abs() < 1e-18);
        assert_eq!(report["flavor"], flavor);
        assert_eq!(report["below_resolution"], false);
        for key in ["delta_rho_c_ohm_cm2", "transfer_length_um", "slope_ohm_per_um", "value_at_reference_ohm", "r_squared"] {
            assert!(report[key].is_number(), "{key}");
        }
        let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(saved, report);
    }
}

#[test]
fn extract_requires_a_deembed_value() {
    let dir = TempDir::new().unwrap();
    run(dir.path(), &["simulate", "--out", "m.csv"]);
    let out = run(dir.path(), &["extract", "m.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("de-embed"));
}

#[test]
fn three_point_series_is_enough() {
    let dir = TempDir::new().unwrap();
    let data = write(
        dir.path(),
        "m.csv",
        "length_um,resistance_ohm\n4,100.1\n9,54.6\n14,9.0\n",
    );
    let out = run(dir.path(), &["extract", data.to_str().unwrap(), "--deembed-ohm", "7.9"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["n_points"], 3);
    assert!(num(&report, "slope_se_ohm_per_um") > 0.0);
    assert!(num(&report, "delta_rho_c_ohm_cm2") > 0.0);
}

#[test]
fn below_resolution_exits_two() {
    let dir = TempDir::new().unwrap();
    run(dir.path(), &["simulate", "--out", "m.csv"]);
    let out = run(dir.path(), &["extract", "m.csv", "--deembed-ohm", "23.5"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["below_resolution"], true);
    assert_eq!(num(&report, "rho_c_ohm_cm2"), 0.0);
}

#[test]
fn malformed_csv_names_the_row() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("length_um,resistance_ohm\n1,20\n2,abc\n3,18\n", "bad.csv:3:"),
        ("length_um,resistance_ohm\n1,20\n2,19\n3,1,000\n", "bad.csv:4:"),
        ("length,resistance\n1,20\n", "bad.csv:1:"),
    ];
    for (text, needle) in cases {
        write(dir.path(), "bad.csv", text);
        let out = run(dir.path(), &["extract", "bad.csv", "--deembed-ohm", "1"]);
        assert_eq!(out.status.code(), Some(1));
        assert!(stderr(&out).contains(needle), "{needle}: {}", stderr(&out));
    }
}

#[test]
fn config_errors_are_invalid_input() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "run.cfg", "r_shs_ohm_sq = 100\nw_microns = 10\n");
    let out = run(dir.path(), &["--config", "run.cfg", "simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("run.cfg:2") && stderr(&out).contains("w_microns"));

    let out = run(dir.path(), &["simulate", "--set", "l0_um=-3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(dir.path(), &["simulate", "--flavor", "tlm"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_drives_the_run() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "run.cfg",
        "# narrower sweep\nflavor = hr-rtlm\nl0_um = 12\nsweep_um = 1, 2, 3, 4\nout = rtlm.csv\n",
    );
    let out = run(dir.path(), &["--config", "run.cfg", "simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let data = rows(&dir.path().join("rtlm.csv"));
    assert_eq!(data.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 4.0]);
}

fn validate_rows(out: &Output) -> Vec<(String, String)> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split_whitespace().collect();
            let status = cols.iter().find(|c| ["pass", "FAIL", "skipped", "error"].contains(c)).unwrap();
            (cols[0].to_string(), status.to_string())
        })
        .collect()
}

#[test]
fn validate_reference_stack() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["validate", "--out", "v.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = validate_rows(&out);
    assert_eq!(rows.len(), 9);
    let status = |name: &str| rows.iter().find(|r| r.0 == name).unwrap().1.clone();
    assert_eq!(status("full_metal_resistance"), "pass");
    assert_eq!(status("partitioned_resistance"), "pass");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    let full = report["rows"].as_array().unwrap().iter().find(|r| r["name"] == "full_metal_resistance").unwrap();
    assert!(full["relative_error"].as_f64().unwrap() <= 1e-3);
    assert_eq!(full["status"], "pass");
}

#[test]
fn validate_coarse_grid_warns() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["validate", "--n-segments", "500"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("coarse grid"), "{}", stderr(&out));

    let out = run(dir.path(), &["validate", "--n-segments", "20"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_zero_rho_skips_degenerate_rows() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["validate", "--set", "rho_c_ohm_cm2=0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = validate_rows(&out);
    let skipped: Vec<&str> = rows.iter().filter(|r| r.1 == "skipped").map(|r| r.0.as_str()).collect();
    assert_eq!(
        skipped,
        ["contact_resistance", "metal_profile_at_lt", "semiconductor_profile_at_lt", "deembedded_value_at_l0"]
    );
    assert!(rows.iter().filter(|r| r.1 != "skipped").all(|r| r.1 == "pass"), "{rows:?}");
    assert!(stderr(&out).is_empty(), "{}", stderr(&out));
}

#[test]
fn mc_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["mc", "--trials", "2000", "--seed", "11", "--per-trial", "t.csv"];
    let a = run(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let first = std::fs::read(dir.path().join("t.csv")).unwrap();
    let b = bin()
        .current_dir(dir.path())
        .env("TLM_FORGE_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first, std::fs::read(dir.path().join("t.csv")).unwrap());

    let report = json(&a);
    assert_eq!(report["trials"], 2000);
    assert_eq!(report["wide_ci"], false);
    assert!(num(&report, "std_ohm_cm2") > 0.0);
    assert!(num(&report, "analytic_std_ohm_cm2") > 0.0);
    let lines: Vec<String> = std::fs::read_to_string(dir.path().join("t.csv")).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[0], "trial,rho_c_ohm_cm2");
    assert_eq!(lines.len(), 2001);
}

#[test]
fn mc_minimum_trials_flags_wide_interval() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["mc", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["wide_ci"], true);
    let out = run(dir.path(), &["mc", "--trials", "99"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    for ok in ["0", "2"] {
        let out = bin().current_dir(dir.path()).env("TLM_FORGE_THREADS", ok).args(["mc", "--trials", "100"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{ok}");
    }
    let out = bin().current_dir(dir.path()).env("TLM_FORGE_THREADS", "many").args(["mc", "--trials", "100"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
