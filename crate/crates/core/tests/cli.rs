// End-to-end runs of the binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soliton-check"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn verify_json(dir: &Path, name: &str, extra: &[&str]) -> (i32, String) {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let mut args = vec!["verify"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--format", "json", "--out", p]);
    let o = bin(&args);
    (code(&o), p.to_string())
}

#[test]
fn cflat_passes_and_forced_lambda_fails() {
    let o = bin(&["verify", "cflat_pp_wave", "--param", "a=1", "--points", "100", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = bin(&["verify", "cflat_pp_wave", "--param", "a=1", "--lambda", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL soliton"));
}

#[test]
fn group_selection() {
    let o = bin(&["verify", "two_symmetric", "--param", "a11=1,a22=2", "--checks", "two_symmetric,soliton"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("two_symmetric.nabla2") && out.contains("soliton"));
    assert!(!out.contains("trace"));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["verify", "two_symmetric", "--checks", "bogus"],
        vec!["verify", "nope"],
        vec!["verify", "cflat_pp_wave", "--param", "zzz=1"],
        vec!["verify", "cflat_pp_wave", "--param", "a=(("],
        vec!["verify", "cflat_pp_wave", "--tol", "nothing=1e-3"],
        vec!["verify", "cflat_pp_wave", "--tol", "soliton=abc"],
        vec!["verify", "cigar_2d", "--box", "t=-1:1"],
        vec!["verify", "cigar_2d", "--box", "q=0.5:1"],
        vec!["verify", "cigar_2d", "--points", "0"],
        vec!["verify", "minkowski_gaussian", "--lambda", "1", "--param", "lambda=2"],
        vec!["list", "--family", "nope"],
        vec!["frobnicate"],
    ] {
        let o = bin(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn tolerance_override() {
    // A loose tolerance turns the forced-lambda soliton failure into a pass for that check only.
    let o = bin(&["verify", "cflat_pp_wave", "--lambda", "1", "--checks", "soliton", "--tol", "soliton=100"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("<= 1.0e2"));
}

#[test]
fn lambda_sets_family_parameter() {
    let o = bin(&["verify", "minkowski_gaussian", "--lambda", "-2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["parameters"]["lambda"], "-2");
}

#[test]
fn listing() {
    let o = bin(&["list"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("cflat_soliton_vector"));
    let o = bin(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 14);
    let o = bin(&["list", "--family", "cigar_2d", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["id"], "cigar_2d");
}

#[test]
fn json_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["cflat_soliton_vector", "--param", "a=exp(u)", "--seed", "11", "--points", "40"];
    let (c1, p1) = verify_json(dir.path(), "a.json", &args);
    let (c2, p2) = verify_json(dir.path(), "b.json", &args);
    assert_eq!((c1, c2), (0, 0));
    let strip = |p: &str| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("generated_at");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&p1), strip(&p2));
}

#[test]
fn report_merge() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = verify_json(dir.path(), "a.json", &["cflat_pp_wave", "--param", "a=1"]);
    let (_, b) = verify_json(dir.path(), "b.json", &["two_symmetric"]);
    let (c, bad) = verify_json(dir.path(), "c.json", &["cflat_pp_wave", "--lambda", "1"]);
    assert_eq!(c, 1);
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"family\": 3").unwrap();

    let o = bin(&["report", &a, &b]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("all reports passed"));

    let o = bin(&["report", &a, &b, &bad, "--format", "json"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["matrix"]["cflat_pp_wave"]["soliton"], false);
    assert_eq!(v["matrix"]["two_symmetric"]["two_symmetric"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);

    let o = bin(&["report", &a, "--format", "csv"]);
    assert!(stdout(&o).starts_with("path,family,check,passed"));

    let o = bin(&["report", &a, junk.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("junk.json"));
}
