use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinorcalc"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_tmp(name: &str, text: &str) -> String {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

const E4: &str = r#""schema_version": 1, "signature": [1, 1, 1, 1], "geometry": "flat",
    "points": {"count": 4, "seed": 11}"#;

const PSI: &str = r#""psi": {"kind": "coordinate-spinor",
    "phi0": [[1, 0], [0, 0], [0.5, 0.5], [0, 0]],
    "phi1": [[0, 0], [1, 0], [0, 0], [0, -1]]}"#;

#[test]
fn bundled_scenarios_pass() {
    let mut seen = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let cmd = if name.starts_with("backend-") { "certify" } else { "run" };
        let out = exec(&[cmd, path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["passed"], Value::Bool(true), "{name}");
        seen += 1;
    }
    assert!(seen >= 7);
}

#[test]
fn reports_are_deterministic() {
    let file = scenarios().join("sphere-twistor-to-harmonic.json");
    let file = file.to_str().unwrap();
    let a = exec(&["run", file]);
    let b = exec(&["run", file]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = exec(&["run", file, "--seed", "99", "--points", "5"]);
    assert_ne!(a.stdout, c.stdout);
    let r = json(&c);
    assert_eq!(r["seed"], 99);
    assert_eq!(r["checks"][0]["per_point"].as_array().unwrap().len(), 5);
}

#[test]
fn flat_scenario_report_shape() {
    let out = exec(&["run", scenarios().join("flat-twistor-to-harmonic.json").to_str().unwrap()]);
    let r = json(&out);
    assert_eq!(r["certification"]["passed"], Value::Bool(true));
    for check in r["checks"].as_array().unwrap() {
        let max = check["max_norm"].as_f64().unwrap();
        assert!(max <= check["tolerance"].as_f64().unwrap());
        let worst = check["per_point"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).fold(0.0, f64::max);
        assert_eq!(worst, max);
        assert_eq!(check["verdict"], "pass");
    }
    let chain = &r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "full chain").unwrap();
    assert_eq!(chain["stages"], serde_json::json!(["L_omega", "L_alpha", "Script_L_omega"]));
    assert_eq!(chain["equation"], "HARMONIC");
}

#[test]
fn non_cky_omega_is_a_precondition_failure() {
    let text = format!(
        r#"{{{E4}, "name": "bad-omega", "fields": {{{PSI},
            "omega": {{"kind": "polynomial-form", "components": [{{"blade": [1], "poly": [[1, [1, 0, 0, 0]]]}}]}}}},
            "checks": [{{"name": "L_omega", "input": "psi",
                "pipeline": [{{"op": "L_omega", "ingredient": "omega"}}], "tolerance": 1e-9}}]}}"#
    );
    let out = exec(&["run", &write_tmp("bad-omega.json", &text)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CKY"));
    assert!(out.stdout.is_empty());
}

#[test]
fn empty_checks_pass() {
    let text = format!(r#"{{{E4}, "name": "empty"}}"#);
    let out = exec(&["run", &write_tmp("empty.json", &text)]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["checks"], serde_json::json!([]));
    assert_eq!(r["passed"], Value::Bool(true));
}

#[test]
fn failing_verdict_exits_one() {
    let text = format!(
        r#"{{{E4}, "name": "not-harmonic", "fields": {{{PSI}}},
            "checks": [{{"name": "psi is harmonic", "equation": "HARMONIC", "field": "psi", "tolerance": 1e-9}}]}}"#
    );
    let out = exec(&["run", &write_tmp("not-harmonic.json", &text)]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["passed"], Value::Bool(false));
    assert_eq!(r["checks"][0]["verdict"], "fail");
    assert!(r["checks"][0]["max_norm"].as_f64().unwrap() > 1e-2);
    // a large enough scale turns it into a pass
    let out = exec(&["run", &write_tmp("not-harmonic.json", &text), "--tolerance-scale", "1e12"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn schema_errors_exit_two() {
    let cases = [
        format!(r#"{{{E4}, "name": "x", "surprise": 1}}"#),
        format!(r#"{{{E4}, "name": "x", "checks": [{{"name": "c", "equation": "TWISTOR", "field": "nope", "tolerance": 1}}]}}"#),
        format!(r#"{{{E4}, "name": "x", "checks": [{{"name": "c", "equation": "NOT_AN_EQUATION", "field": "psi", "tolerance": 1}}], "fields": {{{PSI}}}}}"#),
        r#"{"schema_version": 7, "name": "x", "signature": [1, 1], "geometry": "flat", "points": {"count": 1, "seed": 0}}"#.to_string(),
        format!(r#"{{{E4}, "name": "x", "fields": {{"psi": {{"kind": "constant-spinor", "phi": [[1, 0]]}}}}}}"#),
        "not json".to_string(),
    ];
    for (i, text) in cases.iter().enumerate() {
        let out = exec(&["run", &write_tmp(&format!("schema-{i}.json"), text)]);
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = exec(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_degree_exits_four() {
    let text = format!(
        r#"{{{E4}, "name": "singular", "fields": {{
            "a": {{"kind": "polynomial-form", "components": [{{"blade": [1], "poly": [[1, [0, 0, 0, 0]]]}}]}}}},
            "checks": [{{"name": "a", "equation": "POTENTIAL", "field": "a", "tolerance": 1e-9}}]}}"#
    );
    let out = exec(&["run", &write_tmp("singular.json", &text)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn certify_backends() {
    let flat = json(&exec(&["certify", scenarios().join("flat-twistor-to-harmonic.json").to_str().unwrap()]));
    for line in flat["checks"].as_array().unwrap() {
        assert_eq!(line["max_residual"].as_f64().unwrap(), 0.0, "{}", line["name"]);
    }
    let sphere = json(&exec(&["certify", scenarios().join("backend-sphere.json").to_str().unwrap()]));
    assert_eq!(sphere["passed"], Value::Bool(true));
    assert_eq!(sphere["points"], 100);
    let line = sphere["checks"].as_array().unwrap().iter().find(|l| l["name"] == "R_ab = k e_a^e_b").unwrap();
    assert!(line["max_residual"].as_f64().unwrap() <= 1e-9);
    let hyp = json(&exec(&["certify", scenarios().join("backend-hyperbolic.json").to_str().unwrap()]));
    assert_eq!(hyp["passed"], Value::Bool(true));
    assert!(hyp["rejected_points"].as_u64().unwrap() > 0);
}

#[test]
fn list_equations() {
    let out = exec(&["list-equations"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["TWISTOR", "HARMONIC", "CKY", "POTENTIAL", "GAUGED_HARMONIC", "OBSTRUCTION"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(id)), "{id}");
    }
}

#[test]
fn seiberg_witten_scenario_reports_norms() {
    let out = exec(&["run", scenarios().join("seiberg-witten-flat-connection.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let sw = r["sw"].as_array().unwrap();
    assert_eq!(sw.len(), 4);
    for c in sw {
        assert_eq!(c["orientation"], "e1234");
        assert!(c["dirac_max"].as_f64().unwrap() < 1e-9);
        assert_eq!(c["self_dual_max"].as_f64().unwrap(), 0.0);
        // nonzero spinors never have a vanishing Hermitian current
        let current = c["current_max"].as_f64().unwrap();
        assert!(current > 1.0);
        assert_eq!(c["current_vanishes"], Value::Bool(false));
        assert_eq!(c["solution"], Value::Bool(false));
        // |F⁺ + ¼τ| with F = 0, up to the rounding of |¼τ| against ¼|τ|
        assert!((c["curvature_max"].as_f64().unwrap() - 0.25 * current).abs() <= 1e-15 * current);
    }
}
