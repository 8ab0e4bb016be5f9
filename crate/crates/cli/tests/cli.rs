use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn gridmass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridmass"))
        .args(args)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_example(dir: &Path, name: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    let out = gridmass(&["examples", name, "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    path.to_str().unwrap().to_string()
}

fn kappas(v: &Value) -> Vec<(String, String, Value)> {
    v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["u"].as_str().unwrap().into(), e["v"].as_str().unwrap().into(), e["kappa"].clone()))
        .collect()
}

#[test]
fn doubled_vertex_on_the_torus() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "appendix1");
    let out = gridmass(&["curvature", &path, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    for (u, v, k) in kappas(&stdout_json(&out)) {
        let expect = if (u.as_str(), v.as_str()) == ("a", "b") { "5" } else { "0" };
        assert_eq!(k, json!(expect), "{u}-{v}");
    }
}

#[test]
fn doubled_vertex_on_the_cycle_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "appendix2");
    let out = gridmass(&["curvature", &path, "--format", "json"]);
    let ks = kappas(&stdout_json(&out));
    assert_eq!(ks.len(), 14);
    assert!(ks.iter().all(|(_, _, k)| *k == json!("0")));
}

#[test]
fn standard_grid_is_flat() {
    let out = gridmass(&["curvature", "--grid", "--n", "2", "--rho", "4", "--format", "json"]);
    let ks = kappas(&stdout_json(&out));
    assert!(!ks.is_empty());
    assert!(ks.iter().all(|(_, _, k)| *k == json!("0")));
    let out = gridmass(&["scalar", "--grid", "--n", "3", "--rho", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0,0,0")), "{text}");
}

#[test]
fn float_mode_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "appendix1");
    let out = gridmass(&["curvature", &path, "--numeric", "float", "--edge", "a:b", "--format", "json"]);
    let ks = kappas(&stdout_json(&out));
    assert_eq!(ks[0].2, json!(5.0));
}

#[test]
fn log_model_mass_series() {
    let out = gridmass(&["mass", "--field", "log-model", "--r-max", "100", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    let m: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((m - 0.01).abs() < 1e-4, "{last}");
}

#[test]
fn standard_grid_has_zero_mass() {
    let out = gridmass(&["mass", "--grid", "--n", "2", "--rho", "8", "--rigidity", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["estimate"]["partial"].as_array().unwrap().iter().all(|p| p["m_r"] == json!("0")));
    assert_eq!(v["rigidity"]["rigidity_confirmed"], json!(true));
}

#[test]
fn exact_mode_is_refused_for_irrational_fields() {
    let out = gridmass(&["mass", "--field", "schwarzschild", "--numeric", "exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unit_weights_on_the_example_torus_give_zero() {
    let out = gridmass(&["torus", "--example", "--k", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["total"], json!("0"));
    assert_eq!(v["distance_condition"]["holds"], json!(true));
}

#[test]
fn random_torus_is_deterministic_and_nonpositive() {
    let args = ["torus", "--identity", "2", "--k", "6", "--random-weights", "--seed", "9", "--format", "json"];
    let a = gridmass(&args);
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "1"]);
    let b = gridmass(&with_jobs);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["nonpositive"], json!(true));
}

#[test]
fn degenerate_torus_is_an_input_error() {
    let out = gridmass(&["torus", "--identity", "2", "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rigidity_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let standard = write_example(dir.path(), "standard-core");
    let doubled = write_example(dir.path(), "appendix1-core");
    assert_eq!(gridmass(&["rigidity", &standard]).status.code(), Some(0));
    let out = gridmass(&["rigidity", &doubled, "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["failed_stage"], json!("multiplicity"));
}

#[test]
fn every_example_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridmass(&["examples", "all", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let once = fs::read_to_string(dir.path().join(&name)).unwrap();
        let single = gridmass(&["examples", name.trim_end_matches(".json")]);
        assert_eq!(String::from_utf8(single.stdout).unwrap(), once, "{name}");
    }
}

#[test]
fn extension_across_a_strip() {
    // 3 × 2 ladder; K is the middle rung
    let graph = json!({
        "vertices": ["0,0", "0,1", "1,0", "1,1", "2,0", "2,1"],
        "edges": [
            {"u": "0,0", "v": "0,1", "w": "1"}, {"u": "1,0", "v": "1,1", "w": "1"}, {"u": "2,0", "v": "2,1", "w": "1"},
            {"u": "0,0", "v": "1,0", "w": "1"}, {"u": "1,0", "v": "2,0", "w": "1"},
            {"u": "0,1", "v": "1,1", "w": "1"}, {"u": "1,1", "v": "2,1", "w": "1"}
        ]
    });
    let input = json!({
        "graph": graph,
        "X": ["0,0", "0,1"], "Y": ["2,0", "2,1"], "K": ["1,0", "1,1"],
        "f": {"1,0": "0", "1,1": "1"}
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strip.json");
    fs::write(&path, input.to_string()).unwrap();
    let out = gridmass(&["salami-extend", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    // sup of f − d on X, inf of f + d on Y
    for (label, value) in [("0,0", "-1"), ("0,1", "0"), ("1,0", "0"), ("1,1", "1"), ("2,0", "1"), ("2,1", "2")] {
        assert_eq!(v["Sf"][label], json!(value), "{label}");
    }
}

#[test]
fn malformed_json_reports_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"vertices\": [\"a\",\n}").unwrap();
    let out = gridmass(&["curvature", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn budget_exhaustion_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "appendix1");
    let out = gridmass(&["curvature", &path, "--budget", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("budget exceeded"));
}

#[test]
fn check_runs_single_criteria() {
    let out = gridmass(&["check", "--only", "4", "--only", "9", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert!(v.as_array().unwrap().iter().all(|r| r["passed"] == json!(true)));
}
