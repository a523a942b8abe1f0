//! End-to-end tests of the binary: subcommands, outputs, and exit codes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neteffects"))
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(content.as_bytes()).unwrap();
    path
}

const LINE_CSV: &str =
    "0,1,0,0,0,0\n1,0,1,0,0,0\n0,1,0,1,0,0\n0,0,1,0,1,0\n0,0,0,1,0,1\n0,0,0,0,1,0\n";
const STAR_CSV: &str =
    "0,1,1,1,1,1\n1,0,0,0,0,0\n1,0,0,0,0,0\n1,0,0,0,0,0\n1,0,0,0,0,0\n1,0,0,0,0,0\n";

struct Toy {
    _dir: tempfile::TempDir,
    line: PathBuf,
    star: PathBuf,
}

fn toy() -> Toy {
    let dir = tempfile::tempdir().unwrap();
    let line = write_file(dir.path(), "line.csv", LINE_CSV);
    let star = write_file(dir.path(), "star.csv", STAR_CSV);
    Toy {
        _dir: dir,
        line,
        star,
    }
}

#[test]
fn bounds_dpo_reports_interval_and_provenance() {
    let toy = toy();
    let out = bin()
        .args(["bounds-dpo", "--arm1"])
        .arg(&toy.line)
        .arg("--arm0")
        .arg(&toy.star)
        .args(["--y1", "0", "--y0", "0"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["lower"].as_f64().unwrap() - 16.0 / 36.0).abs() < 1e-9);
    assert!(json["upper"].as_f64().unwrap() < 0.67);
    assert_eq!(json["lower_active"], "sum_minus_one");
    assert_eq!(json["upper_active"], "co_paired");
}

#[test]
fn bounds_dte_curve_csv() {
    let toy = toy();
    let out = bin()
        .arg("bounds-dte")
        .arg("--arm1")
        .arg(&toy.line)
        .arg("--arm0")
        .arg(&toy.star)
        .args(["--grid", "-1,0,1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,lower,upper"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "-1");
    let lower: f64 = first[1].parse().unwrap();
    assert!(lower > 0.0, "toy DTE(-1) lower bound should be positive");
}

#[test]
fn oracle_counts_toy() {
    let toy = toy();
    let out = bin()
        .arg("oracle")
        .arg("--arm1")
        .arg(&toy.line)
        .arg("--arm0")
        .arg(&toy.star)
        .arg("--counts")
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["destroyed"]["values"], serde_json::json!([3.0, 4.0]));
}

#[test]
fn ste_summary_reports_disruption() {
    let toy = toy();
    let dir = tempfile::tempdir().unwrap();
    let field_path = dir.path().join("stt.csv");
    let out = bin()
        .arg("ste")
        .arg("--arm1")
        .arg(&toy.line)
        .arg("--arm0")
        .arg(&toy.star)
        .args(["--basis", "stt", "--field-out"])
        .arg(&field_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["disruption_lower_bound"].as_f64().unwrap() > 0.0);
    let field = std::fs::read_to_string(&field_path).unwrap();
    assert_eq!(field.lines().count(), 6);
}

#[test]
fn missing_file_is_validation_failure() {
    let out = bin()
        .args(["bounds-dpo", "--arm1", "/nonexistent.csv", "--arm0", "/nonexistent.csv"])
        .args(["--y1", "0", "--y0", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn asymmetric_input_is_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_file(dir.path(), "bad.csv", "0,1\n0,0\n");
    let out = bin()
        .arg("bounds-dpo")
        .arg("--arm1")
        .arg(&bad)
        .arg("--arm0")
        .arg(&bad)
        .args(["--y1", "0", "--y0", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not symmetric"), "stderr: {err}");
}

#[test]
fn report_bundle_with_subgroups() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "arm1.csv", LINE_CSV);
    write_file(dir.path(), "arm0.csv", STAR_CSV);
    // same H/L split in both arms so cross panels stay coherent
    write_file(
        dir.path(),
        "attrs.csv",
        "label,type\n0,H\n1,H\n2,H\n3,L\n4,L\n5,L\n",
    );
    write_file(
        dir.path(),
        "config.toml",
        r#"
outcome = "levels"
adjust = "reduction"
attributes = "attrs.csv"

[inputs.arm1]
path = "arm1.csv"
format = "dense_csv"

[inputs.arm0]
path = "arm0.csv"
format = "dense_csv"

[[subgroups]]
name = "HH"
select = "type=H"

[[subgroups]]
name = "HL"
left = "type=H"
right = "type=L"

[output]
directory = "out"

[report]
dte_grid = [-1.0, 0.0, 1.0]
oracle = true
"#,
    );
    let out = bin()
        .arg("report")
        .arg("--config")
        .arg(dir.path().join("config.toml"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out_dir = dir.path().join("out");
    for name in [
        "cells_full.csv",
        "fh_cells_full.csv",
        "dte_full.csv",
        "ste_full.json",
        "summary_full.json",
        "cells_HH.csv",
        "cells_HL.csv",
        "manifest.json",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary_full.json")).unwrap())
            .unwrap();
    assert_eq!(summary["mean_difference"], 0.0);
    assert_eq!(
        summary["destroyed"]["sharp_count_set"],
        serde_json::json!([3.0, 4.0])
    );
    assert_eq!(
        summary["destroyed"]["count_fh"],
        serde_json::json!([0.0, 5.0])
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["tool"]["name"], "neteffects");
    assert!(manifest["inputs"].as_array().unwrap().len() >= 3);
}

#[test]
fn report_missing_input_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    write_file(
        dir.path(),
        "config.toml",
        r#"
outcome = "levels"

[inputs.arm1]
path = "missing.csv"
format = "dense_csv"

[inputs.arm0]
path = "missing.csv"
format = "dense_csv"

[output]
directory = "out"
"#,
    );
    let out = bin()
        .arg("report")
        .arg("--config")
        .arg(dir.path().join("config.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn denoise_flag_roundtrips() {
    let toy = toy();
    let out = bin()
        .arg("bounds-dpo")
        .arg("--arm1")
        .arg(&toy.line)
        .arg("--arm0")
        .arg(&toy.star)
        .args(["--y1", "0", "--y0", "0", "--denoise", "svt:0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = bin()
        .arg("bounds-dpo")
        .arg("--arm1")
        .arg(&toy.line)
        .arg("--arm0")
        .arg(&toy.star)
        .args(["--y1", "0", "--y0", "0", "--denoise", "svt:-1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2), "negative tau is rejected");
}
