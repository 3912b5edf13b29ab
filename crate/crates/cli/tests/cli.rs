use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn henon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_henon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const HENON: [&str; 8] = ["--n", "3", "--alpha", "1", "--g", "power:p=2,c=0.5", "--h", "power:p=4,c=0.25"];

#[test]
fn catalog_examples() {
    let v = json(&henon(&["catalog", "power_sum", "--p", "2", "--q", "3"]));
    assert_eq!(v["indices"]["p_minus"].as_f64(), Some(2.0));
    assert_eq!(v["indices"]["p_plus"].as_f64(), Some(3.0));
    let v = json(&henon(&["catalog", "loglog", "--p", "2", "--s", "1"]));
    assert!((v["indices"]["p_plus"].as_f64().unwrap() - 3.0).abs() < 1e-3);
    let bad = henon(&["catalog", "power", "--p", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("p > 1"));
}

#[test]
fn classify_examples() {
    let v = json(&henon(&["classify", "--n", "3", "--alpha", "1", "--g", "power:p=2", "--h", "power:p=5,c=0.2", "--r", "power:p=5.5"]));
    assert_eq!(v["verdict"], "ExistenceGuaranteed");
    let v = json(&henon(&["classify", "--n", "3", "--alpha", "1", "--g", "power:p=2", "--h", "power:p=9,c=0.1111111111111111"]));
    assert_eq!(v["verdict"], "NonexistenceGuaranteed");
    assert!(!v["caveats"].as_array().unwrap().is_empty());
    let v = json(&henon(&["classify", "--n", "3", "--alpha", "1", "--g", "power:p=3", "--h", "power:p=2"]));
    assert_eq!(v["verdict"], "Indeterminate");
}

#[test]
fn classify_csv_is_one_row() {
    let out = henon(&["classify", "--n", "3", "--alpha", "1", "--g", "power:p=2", "--h", "power:p=5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let col = lines[0].split(',').position(|c| c == "verdict").unwrap();
    assert_eq!(lines[1].split(',').nth(col), Some("Indeterminate"));
}

#[test]
fn config_file_and_field_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.toml");
    std::fs::write(
        &good,
        "[spec]\nn = 3\nalpha = 1.0\ng = { family = \"power\", p = 2 }\nh = { family = \"power\", p = 5 }\nr = { family = \"power\", p = 5.5 }\n",
    )
    .unwrap();
    let v = json(&henon(&["classify", "--config", good.to_str().unwrap()]));
    assert_eq!(v["verdict"], "ExistenceGuaranteed");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[spec]\nn = 3\nh = { family = \"power\", p = \"four\" }\n").unwrap();
    let out = henon(&["classify", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("spec.h"), "{}", stderr(&out));
}

#[test]
fn solve_shooting_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("shoot");
    let mut args = vec!["solve"];
    args.extend(HENON);
    args.extend(["--grid-size", "128", "--out", out_dir.to_str().unwrap()]);
    let v = json(&henon(&args));
    assert!(v["residual"].as_f64().unwrap() <= 1e-4);
    let csv = std::fs::read_to_string(out_dir.join("profile.csv")).unwrap();
    assert!(csv.starts_with("r,u,du\n"));
    assert_eq!(csv.lines().count(), 130);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(saved["residual"], v["residual"]);
}

#[test]
fn solve_mountain_pass_emits_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--method", "mountain-pass", "--grid-size", "64", "--seed", "3"];
    args.extend(HENON);
    args.extend(["--out", dir.path().to_str().unwrap()]);
    let v = json(&henon(&args));
    assert!(v["energy"].as_f64().unwrap() > 0.0);
    let t = std::fs::read_to_string(dir.path().join("telemetry.csv")).unwrap();
    assert!(t.starts_with("iteration,phase,path_max,residual,step,t_star\n"));
    assert!(t.lines().count() >= 2);
}

#[test]
fn solve_refuses_nonexistence() {
    let out = henon(&["solve", "--n", "3", "--alpha", "1", "--g", "power:p=2", "--h", "power:p=9"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("nonexistence criterion"));
}

#[test]
fn forced_sublinear_solve_is_numerical_failure() {
    let out = henon(&["solve", "--method", "mountain-pass", "--n", "3", "--g", "power:p=3", "--h", "power:p=2", "--grid-size", "32"]);
    assert_eq!(out.status.code(), Some(4));
    let out = henon(&["solve", "--method", "mountain-pass", "--n", "3", "--g", "power:p=3", "--h", "power:p=2", "--grid-size", "32", "--force"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

fn manufactured(path: &Path) {
    let n = 64;
    let mut s = String::from("r,u,du\n");
    for i in 0..=n {
        let r = i as f64 / n as f64;
        s.push_str(&format!("{r:.16e},{:.16e},{:.16e}\n", 1.0 - r * r, -2.0 * r));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn verify_manufactured_profile() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    manufactured(&path);
    let v = json(&henon(&[
        "verify", "--n", "3", "--g", "power:p=2,c=0.5", "--h", "power:p=4", "--source", "constant:6",
        "--profile", path.to_str().unwrap(),
    ]));
    assert!(v["pohozaev"]["residual"].as_f64().unwrap() <= 1e-6);
    for key in ["pohozaev", "strauss", "residual", "levels"] {
        assert!(!v[key].is_null(), "{key} missing");
    }
    let v = json(&henon(&[
        "verify", "--n", "3", "--g", "power:p=2,c=0.5", "--h", "power:p=4", "--source", "constant:6",
        "--profile", path.to_str().unwrap(), "--checks", "residual",
    ]));
    assert!(v["pohozaev"].is_null());
    assert!(v["residual"].as_f64().unwrap() < 1e-3);
}

#[test]
fn verify_reports_malformed_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    std::fs::write(&path, "r,u,du\n0,1,0\n0.5,0.75\n1,0,-2\n").unwrap();
    let out = henon(&["verify", "--n", "3", "--g", "power:p=2", "--h", "power:p=4", "--profile", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn sweep_single_point_matches_classify() {
    let sweep = henon(&["sweep", "--n", "3", "--alpha", "1", "--g", "power:p=2", "--q-range", "5,5,1"]);
    let classify = henon(&["classify", "--n", "3", "--alpha", "1", "--g", "power:p=2", "--h", "power:p=5", "--format", "csv"]);
    let s = String::from_utf8(sweep.stdout).unwrap();
    let c = String::from_utf8(classify.stdout).unwrap();
    let tail = |t: &str, skip: usize| t.lines().nth(1).unwrap().splitn(skip + 1, ',').last().unwrap().to_string();
    assert_eq!(tail(&s, 3), tail(&c, 5));
}

#[test]
fn sweep_threads_byte_identical() {
    let base = ["sweep", "--n", "3", "--g", "power:p=2", "--alpha-range", "0,4,6", "--q-range", "2,12,6"];
    let serial = henon(&[&base[..], &["--serial"]].concat());
    let parallel = henon(&[&base[..], &["--threads", "3"]].concat());
    assert!(serial.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
    assert_eq!(String::from_utf8_lossy(&serial.stdout).lines().count(), 37);
}
