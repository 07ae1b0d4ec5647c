use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_interplab"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json_file(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Temp dir with `line.json` (64 points, spacing 1/64) and `tent.csv`.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["space", "build", "--grid", "64", "--spacing", "0.015625", "-o", "line.json"]);
    ok(dir.path(), &["space", "field", "--space", "line.json", "--fn", "@tent", "-o", "tent.csv"]);
    dir
}

#[test]
fn space_build_writes_a_loadable_space() {
    let dir = workspace();
    let s = interplab::load_space(dir.path().join("line.json")).unwrap();
    assert_eq!(s.len(), 64);
    assert!((s.total_mass() - 1.0).abs() < 1e-12);
    let doc = json_file(dir.path().join("line.json"));
    assert_eq!(doc["meta"]["command"], "space build");
    assert_eq!(doc["meta"]["flags"]["command"]["space"]["build"]["grid"], "64");

    let info = ok(dir.path(), &["space", "info", "--space", "line.json"]);
    let info: Value = serde_json::from_slice(&info.stdout).unwrap();
    assert_eq!(info["points"], 64);
    assert!(info["doubling"]["constant"].as_f64().unwrap() >= 1.0);
}

#[test]
fn cone_and_grid_shapes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["space", "build", "--grid", "4x5", "-o", "g.json"]);
    assert_eq!(interplab::load_space(dir.path().join("g.json")).unwrap().len(), 20);
    ok(dir.path(), &["space", "build", "--cone", "2,3,4", "-o", "c.json"]);
    assert!(interplab::load_space(dir.path().join("c.json")).unwrap().len() > 1);
    assert_eq!(run(dir.path(), &["space", "build", "--cone", "2,3"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["space", "build"]).status.code(), Some(2));
}

#[test]
fn kfun_curve_has_one_row_per_grid_point_and_a_sidecar() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["kfun", "--space", "line.json", "--fn", "tent.csv", "--r", "1", "--q", "1", "--grid", "65", "-o", "kcurve.csv"]);
    let text = fs::read_to_string(d.join("kcurve.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,lower,oracle,upper,witness_mu_Omega"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 65);
    for r in &rows {
        assert!(r[2] <= r[3], "oracle above witness: {r:?}");
        assert!(r[1] > 0.0 && r[4] >= 0.0);
    }
    let side = json_file(d.join("kcurve.csv.meta.json"));
    assert_eq!(side["summary"]["rows"], 65);
    assert!(side["summary"]["constants"]["feasibility_gap"].as_f64().unwrap() <= 0.0);
    assert!(side["summary"]["constants"]["c1"].as_f64().unwrap() > 0.0);
    let inputs = side["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
    assert_eq!(side["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn artifacts_are_bit_identical_across_runs() {
    let dir = workspace();
    let d = dir.path();
    let args = |o: &str| -> Vec<String> {
        ["kfun", "--space", "line.json", "--fn", "tent.csv", "--grid", "9", "--theta", "0.5", "-o", o]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    for o in ["a.csv", "b.csv"] {
        let a = args(o);
        ok(d, &a.iter().map(String::as_str).collect::<Vec<_>>());
    }
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    let strip = |p: PathBuf| {
        let mut v = json_file(p);
        // only the output name differs
        v["flags"]["command"]["kfun"]["output"] = Value::Null;
        v["artifact"]["path"] = Value::Null;
        v
    };
    assert_eq!(strip(d.join("a.csv.meta.json")), strip(d.join("b.csv.meta.json")));
    let tab = json_file(d.join("a.csv.meta.json"));
    assert!(tab["summary"]["interpolation_norm"]["value"].as_f64().unwrap() > 0.0);

    ok(d, &["space", "build", "--grid", "64", "--spacing", "0.015625", "-o", "again.json"]);
    let strip_space = |p: PathBuf| {
        let mut v = json_file(p);
        v["meta"]["flags"]["command"]["space"]["build"]["output"] = Value::Null;
        v
    };
    assert_eq!(strip_space(d.join("line.json")), strip_space(d.join("again.json")));
}

#[test]
fn verify_on_the_zero_function_is_clean() {
    let dir = workspace();
    let out = ok(dir.path(), &["verify", "--suite", "all", "--space", "line.json"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["pass"], true);
    for c in doc["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], true);
        assert!(c["value"].is_null() || c["value"].as_f64() == Some(0.0), "{c}");
    }
    for (_, v) in doc["constants"]["kfun"].as_object().unwrap() {
        assert_eq!(v.as_f64(), Some(0.0));
    }
}

#[test]
fn verify_on_the_tent_passes_every_suite() {
    let dir = workspace();
    for suite in ["rearrange", "maximal", "czd", "kfun"] {
        let out = ok(dir.path(), &["verify", "--suite", suite, "--space", "line.json", "--fn", "tent.csv"]);
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["pass"], true, "{suite}");
        assert!(!doc["checks"].as_array().unwrap().is_empty());
    }
    let out = ok(dir.path(), &["verify", "--suite", "czd", "--space", "line.json", "--fn", "tent.csv", "--variant", "local", "--rho", "0.25"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["pass"], true);
}

#[test]
fn primitives_emit_their_artifacts() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["rearrange", "--space", "line.json", "--fn", "tent.csv", "-o", "fstar.csv"]);
    assert!(fs::read_to_string(d.join("fstar.csv")).unwrap().starts_with("t_break,value"));
    let side = json_file(d.join("fstar.csv.meta.json"));
    assert!((side["summary"]["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = ok(d, &["rearrange", "--space", "line.json", "--fn", "tent.csv", "--t", "0.5"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["f_double_star"].as_f64().unwrap() >= v["f_star"].as_f64().unwrap());

    ok(d, &["maximal", "--space", "line.json", "--fn", "tent.csv", "-o", "mf.csv"]);
    let s = interplab::load_space(d.join("line.json")).unwrap();
    let mf = interplab::read_field(&s, d.join("mf.csv")).unwrap();
    let f = interplab::read_field(&s, d.join("tent.csv")).unwrap();
    assert!(mf.iter().zip(f.iter()).all(|(m, v)| *m >= v.abs()));

    ok(d, &["whitney", "--space", "line.json", "--fn", "tent.csv", "--t", "0.3", "-o", "w.json"]);
    let w = json_file(d.join("w.json"));
    assert!(!w["balls"].as_array().unwrap().is_empty());
    for k in ["covers", "cores_disjoint", "inside_omega", "dilations_meet_complement"] {
        assert_eq!(w["checks"][k], true, "{k}");
    }

    ok(d, &["czd", "--space", "line.json", "--fn", "tent.csv", "--q", "2", "--p", "4", "--t", "0.3", "-o", "c.json"]);
    let c = json_file(d.join("c.json"));
    assert_eq!(c["verification"]["pass"], true);
    assert_eq!(c["verification"]["matches_certificate"], true);
    assert!(c["decomposition"]["certificate"]["reconstruction"].as_f64().unwrap() <= 1e-10);

    let out = ok(d, &["kfun", "--space", "line.json", "--fn", "tent.csv", "--t", "0.1", "--variant", "homogeneous"]);
    let k: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(k["oracle"].as_f64().unwrap() <= k["upper"].as_f64().unwrap());

    ok(d, &["--threads", "1", "report", "--space", "line.json", "--fn", "@smooth", "--seed", "3", "--grid", "9", "-o", "r.json"]);
    let r = json_file(d.join("r.json"));
    assert!(r["kfun"]["constants"]["c1"].as_f64().unwrap() > 0.0);
    assert!(r["czd"]["certificate"].is_object());
    assert_eq!(r["meta"]["inputs"][1]["source"], "@smooth:seed=3");
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let d = dir.path();
    let code = |args: &[&str]| run(d, args).status.code();
    assert_eq!(code(&["frobnicate"]), Some(64));
    assert_eq!(code(&["kfun", "--space", "line.json", "--fn", "tent.csv", "--bogus"]), Some(64));
    assert_eq!(code(&[]), Some(64));
    assert_eq!(code(&["--help"]), Some(0));
    // Omega = X for the global variant
    assert_eq!(code(&["czd", "--space", "line.json", "--fn", "tent.csv", "--alpha", "1e-6"]), Some(2));
    assert_eq!(code(&["czd", "--space", "line.json", "--fn", "tent.csv"]), Some(2));
    assert_eq!(code(&["kfun", "--space", "line.json", "--fn", "tent.csv", "--r", "2", "--q", "1", "--t", "0.1"]), Some(2));
    assert_eq!(code(&["kfun", "--space", "missing.json", "--fn", "@tent"]), Some(2));
    assert_eq!(code(&["maximal", "--space", "line.json", "--fn", "@nothing"]), Some(2));
    fs::write(d.join("bad.csv"), "id,value\nnot-a-point,1\n").unwrap();
    assert_eq!(code(&["maximal", "--space", "line.json", "--fn", "bad.csv"]), Some(2));
}

#[test]
fn logging_goes_to_stderr() {
    let dir = workspace();
    let out = bin()
        .current_dir(dir.path())
        .env("INTERPLAB_LOG", "debug")
        .args(["kfun", "--space", "line.json", "--fn", "tent.csv", "--grid", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("t,lower,oracle,upper,witness_mu_Omega"));
    assert_eq!(stdout.lines().count(), 6);
}
