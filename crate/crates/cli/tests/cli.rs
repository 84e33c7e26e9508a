use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use lyapcenter::{run, RunConfig, RunReport, Verdict};
use serde_json::Value;

fn manifest(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(p)
}

fn report(example: &str) -> RunReport {
    let cfg = RunConfig::load(&manifest(&format!("examples/{example}.toml"))).unwrap();
    run(&cfg).unwrap()
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lyapcenter"))
        .args(args)
        .output()
        .unwrap()
}

fn validate(v: &Value) {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(manifest("schema/run_report.schema.json")).unwrap()).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let msgs: Vec<String> = match compiled.validate(v) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("schema violations: {msgs:#?}");
}

#[test]
fn ex1_verdicts() {
    let r = report("ex1");
    let verdicts: Vec<String> = r.orbits.iter().map(|o| o.verdict.to_string()).collect();
    assert!(verdicts[0].starts_with("hypotheses fail: "), "{verdicts:?}");
    assert_eq!(r.orbits[1].verdict, Verdict::OrbitExhibited);
    assert_eq!(verdicts[2], "hypotheses fail: no positive eigenvalue");
    let conley = r.orbits[1].conley.as_ref().unwrap();
    assert_eq!(conley.chi_minus.to_string(), "-I");
    assert_eq!(conley.chi_plus.to_string(), "-I + Z1");
    assert!(r.orbits[1].solutions.iter().all(|s| s.accepted));
}

#[test]
fn ex2_verdicts() {
    let r = report("ex2");
    assert_eq!(r.orbits.len(), 2);
    assert_eq!(r.orbits[0].verdict, Verdict::ClassicalLiapunov);
    assert_eq!(r.orbits[1].verdict, Verdict::OrbitExhibited);
    assert_eq!(r.orbits[1].conley.as_ref().unwrap().chi_plus.to_string(), "I - 2*Z1");
}

#[test]
fn tetrahedral_example_reports_witness() {
    let r = report("tetrahedral");
    let adm = r.subgroup_admissibility.as_ref().unwrap();
    assert!(!adm.admissible && adm.witness.is_some());
    assert!(r.orbits.iter().any(|o| o.verdict == Verdict::OrbitExhibited));
}

#[test]
fn reports_match_schema() {
    for ex in ["ex1", "ex2", "tetrahedral"] {
        let v: Value = serde_json::from_str(&report(ex).to_json()).unwrap();
        validate(&v);
    }
}

#[test]
fn schema_rejects_unknown_verdict() {
    let mut v: Value = serde_json::from_str(&report("ex2").to_json()).unwrap();
    v["orbits"][0]["verdict"] = Value::String("probably fine".into());
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(manifest("schema/run_report.schema.json")).unwrap()).unwrap();
    assert!(!JSONSchema::compile(&schema).unwrap().is_valid(&v));
}

#[test]
fn runs_are_deterministic() {
    let strip = |r: RunReport| {
        let mut v: Value = serde_json::from_str(&r.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("generated_at");
        v
    };
    assert_eq!(strip(report("ex1")), strip(report("ex1")));
}

#[test]
fn run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("orbits");
    let out = bin(&[
        "run",
        manifest("examples/ex2.toml").to_str().unwrap(),
        "--json-out",
        json.to_str().unwrap(),
        "--csv-dir",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("theorem applies; orbit exhibited"), "{stdout}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    validate(&v);
    let name = v["orbits"][1]["solutions"][0]["csv"].as_str().unwrap();
    let text = std::fs::read_to_string(csv.join(name)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,x4,v1,v2,v3,v4,E");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first.len(), 10);
    assert_eq!(first[0], 0.0);
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "potential = \"\"\n[action]\ntype = \"block_rotation\"\ndim = 2\nblocks = [[0, 1]]\n",
    )
    .unwrap();
    let out = bin(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("potential is empty"));

    std::fs::write(
        &cfg,
        "potential = \"radial: t^\"\n[action]\ntype = \"block_rotation\"\ndim = 2\nblocks = [[0, 1]]\n",
    )
    .unwrap();
    assert_eq!(bin(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        bin(&["run", dir.path().join("missing.toml").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn euler_subcommand() {
    for (expr, want) in [
        (r#"chi(S^"R[1,0]+R[3,3]")"#, "-I + 3*Z3"),
        ("Z1 * Z2", "0"),
        ("inv(-I + Z1) * (-I + Z1)", "I"),
    ] {
        let out = bin(&["euler", expr]);
        assert!(out.status.success(), "{expr}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), want, "{expr}");
    }
    assert_eq!(bin(&["euler", "I +* Z"]).status.code(), Some(2));
}

#[test]
fn check_group_subcommand() {
    let table = manifest("examples/tetrahedral.json");
    let out = bin(&[
        "check-group",
        table.to_str().unwrap(),
        "--subgroup",
        "id,(12)(34),(13)(24),(14)(23)",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["admissible"], Value::Bool(false));
    assert!(v["witness"].is_object());

    let out = bin(&["check-group", table.to_str().unwrap(), "--subgroup", "id,(123),(132)"]);
    assert!(out.status.success());
    let bad = bin(&["check-group", table.to_str().unwrap(), "--subgroup", "id,(12)"]);
    assert_eq!(bad.status.code(), Some(2));
}
