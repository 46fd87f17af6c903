use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cutloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutloc")).args(args).output().expect("run cutloc")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn shapes_listing_and_schemas() {
    let out = cutloc(&["shapes"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["circle", "ellipse", "union_disks", "fourier"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }

    let schema = json_of(&cutloc(&["shapes", "circle"]));
    assert_eq!(schema["radius"], "number");
    assert_eq!(schema["center"], "[x,y]");

    let all = json_of(&cutloc(&["shapes", "--json"]));
    let names: Vec<&str> = all.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"superellipse") && names.contains(&"stadium"));

    assert_eq!(cutloc(&["shapes", "hexagon"]).status.code(), Some(2));
}

#[test]
fn report_verdicts() {
    for (shape, verdict) in [("circle", "ball"), ("ellipse", "hypotheses-not-met"), ("union_disks", "inapplicable")] {
        let out = cutloc(&["--shape", shape, "report"]);
        assert_eq!(out.status.code(), Some(0), "{shape}");
        let doc = json_of(&out);
        assert_eq!(doc["command"], "report");
        assert_eq!(doc["result"]["report"]["verdict"], verdict, "{shape}");
    }
}

#[test]
fn report_writes_files_from_a_shape_file() {
    let dir = tempfile::tempdir().unwrap();
    let shape = dir.path().join("e.json");
    fs::write(&shape, r#"{"type": "ellipse", "a": 2.0, "b": 1.0, "rotation": 0.4}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = cutloc(&[
        "--shape",
        shape.to_str().unwrap(),
        "--samples",
        "512",
        "--out",
        out_dir.to_str().unwrap(),
        "report",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc, json_of(&out));
    let r = &doc["result"]["report"];
    assert!((f(&r["phi_at_y0"]) - 0.25).abs() < 1e-3);
    assert!((f(&r["ratio"]) - 0.6485).abs() < 1e-3);
    let csv = fs::read_to_string(out_dir.join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,x,y,nx,ny,kappa,lambda,phi,kappa_lambda");
    assert_eq!(csv.lines().count(), 513);
}

#[test]
fn csv_only_format_skips_json_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = cutloc(&["--shape", "circle", "--samples", "256", "--format", "csv", "--out", dir.path().to_str().unwrap(), "report"]);
    assert!(out.status.success());
    assert!(dir.path().join("samples.csv").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"type\": \"circle\",\n \"radius\": }").unwrap();
    let out = cutloc(&["--shape", bad.to_str().unwrap(), "report"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2, column"), "{err}");

    let unknown = dir.path().join("u.json");
    fs::write(&unknown, r#"{"type": "heart", "size": 1}"#).unwrap();
    assert_eq!(cutloc(&["--shape", unknown.to_str().unwrap(), "report"]).status.code(), Some(2));
    let negative = dir.path().join("n.json");
    fs::write(&negative, r#"{"type": "circle", "radius": -1}"#).unwrap();
    assert_eq!(cutloc(&["--shape", negative.to_str().unwrap(), "report"]).status.code(), Some(2));

    for args in [
        &["--shape", "circle", "--tol", "0.5", "report"][..],
        &["--shape", "circle", "--tol", "0", "report"],
        &["--shape", "circle", "--samples", "0", "report"],
        &["--shape", "circle", "--samples", "32", "report"],
        &["--shape", "no_such_shape", "report"],
        &["report"],
        &["--shape", "circle", "mk", "--gamma", "-1"],
        &["--shape", "circle", "web", "--operator", "plap:0.5"],
        &["--shape", "circle", "web", "--gamma-arc", "1"],
        &["--shape", "circle", "frobnicate"],
    ] {
        assert_eq!(cutloc(args).status.code(), Some(2), "{args:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_cutloc"))
        .env("CUTLOC_THREADS", "zero")
        .args(["--shape", "circle", "report"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn checks(doc: &Value) -> Vec<(String, String, Option<f64>, Option<f64>)> {
    doc["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["name"].as_str().unwrap().to_string(),
                c["status"].as_str().unwrap().to_string(),
                c["value"].as_f64(),
                c["report"]["abs_residual"].as_f64(),
            )
        })
        .collect()
}

#[test]
fn verify_on_the_circle() {
    let out = cutloc(&["--shape", "circle", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    for (name, status, value, _) in checks(&json_of(&out)) {
        assert_eq!(status, "pass", "{name}");
        // the grid side is first-order in h and has its own tolerance
        if !name.starts_with("cov_grid") {
            if let Some(v) = value {
                assert!(v <= 1e-8, "{name}: {v}");
            }
        }
    }
}

#[test]
fn verify_on_cornered_shapes() {
    let out = cutloc(&["--shape", "square", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    let c = checks(&json_of(&out));
    let corners = c.iter().find(|x| x.0 == "minkowski_corners").unwrap();
    assert_eq!(corners.1, "pass");
    assert!(corners.3.unwrap() <= 1e-10);
    assert_eq!(c.iter().find(|x| x.0 == "minkowski").unwrap().1, "inapplicable");

    let out = cutloc(&["--shape", "union_disks", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    for (name, status, _, _) in checks(&json_of(&out)) {
        let expected = match name.as_str() {
            "minkowski_corners" => "out-of-scope",
            n if n.starts_with("cov") || n == "criterion" || n == "mean_phi" => "skipped",
            "minkowski" | "focal" => "inapplicable",
            _ => "pass",
        };
        assert_eq!(status, expected, "{name}");
    }
}

#[test]
fn verify_on_the_fourier_shape() {
    let out = cutloc(&["--shape", "fourier", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    for (name, status, value, _) in checks(&json_of(&out)) {
        assert_eq!(status, "pass", "{name}");
        if name == "minkowski" {
            assert!(value.unwrap() <= 1e-6);
        }
    }
}

#[test]
fn verify_reports_failures_with_exit_one() {
    // 64 samples are too coarse for the ray-side sums
    let out = cutloc(&["--shape", "stadium", "--samples", "64", "verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(checks(&json_of(&out)).iter().any(|c| c.1 == "fail"));
}

#[test]
fn mk_on_the_circle() {
    let dir = tempfile::tempdir().unwrap();
    let out = cutloc(&["--shape", "circle", "--grid-nx", "128", "--grid-ny", "128", "--out", dir.path().to_str().unwrap(), "mk", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let v = &doc["result"]["verdict"];
    assert_eq!(v["report"]["verdict"], "ball");
    assert!((f(&v["trace_min"]) - 0.5).abs() <= 1e-6 && (f(&v["trace_max"]) - 0.5).abs() <= 1e-6);
    let r = &doc["result"];
    let h = f(&r["grid"]["h"]);
    assert!(f(&r["complementarity"]) <= 5.0 * h * f(&r["max_v"]));
    let csv = fs::read_to_string(dir.path().join("mk_field.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,y,u,v,tau,residual,singular");
    // v = |x|/2 on the disk
    for line in csv.lines().skip(1).step_by(97) {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if cols[6] == 0.0 {
            assert!((cols[3] - cols[0].hypot(cols[1]) / 2.0).abs() <= 3.0 * h);
        }
    }
}

#[test]
fn web_identity() {
    let out = cutloc(&["--shape", "circle", "web", "--operator", "laplace"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &json_of(&out)["result"]["record"];
    assert!(f(&rec["teo10"]["residual"]) <= 1e-10);
    assert!((f(&rec["teo10"]["hprime0"]) + 0.5).abs() <= 1e-10);

    let out = cutloc(&["--shape", "ellipse", "web", "--operator", "plap:4", "--gamma-arc=-0.3,0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let rec = &doc["result"]["record"];
    assert_eq!(rec["condition_i"], true);
    assert!(f(&rec["teo10"]["residual"]) <= 1e-4);
    let flux = doc["result"]["profile"]["flux"].as_array().unwrap();
    assert!(f(flux.last().unwrap()).abs() <= 1e-10);

    // Γ around the minor vertex misses the maximal curvature
    let out = cutloc(&["--shape", "ellipse", "web", "--gamma-arc", "2.2,2.6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["result"]["record"]["condition_i"], false);
}

fn same_bytes(args: &[&str], file: &str) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        let mut full = vec!["--out", dir.to_str().unwrap()];
        full.extend_from_slice(args);
        Command::new(env!("CARGO_BIN_EXE_cutloc")).env("CUTLOC_THREADS", threads).args(&full).output().unwrap()
    };
    let (x, y) = (run(a.path(), "1"), run(b.path(), "3"));
    assert!(x.status.success() && y.status.success());
    assert_eq!(x.stdout, y.stdout, "{args:?}");
    assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
}

#[test]
fn outputs_are_deterministic() {
    same_bytes(&["--shape", "fourier", "--samples", "512", "report"], "report.json");
    same_bytes(&["--shape", "ellipse", "--samples", "512", "--grid-nx", "96", "--grid-ny", "96", "mk"], "mk_field.csv");
    same_bytes(&["--shape", "stadium", "--samples", "1024", "web", "--operator", "plap:3"], "web.json");
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let out = cutloc(&["--shape", "ellipse", "--samples", "256", "report"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.trim_start().starts_with("\"ratio\"")).unwrap();
    let num = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = num.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{num}");
}
