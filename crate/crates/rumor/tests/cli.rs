use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rumor::io::read_graph;
use rumor_core::fixtures;

fn rumor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumor")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn shipped_fixtures_parse() {
    assert_eq!(read_graph(&fixture("k4.adj")).unwrap(), fixtures::complete(4));
    assert_eq!(read_graph(&fixture("petersen.adj")).unwrap(), fixtures::petersen());
}

#[test]
fn gen_writes_a_simple_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = rumor(&["gen", "--n", "50", "--d", "3", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("simple=true"));
    let g = read_graph(&out).unwrap();
    assert_eq!((g.n(), g.d()), (50, 3));
    assert!(g.is_simple());

    let bad = rumor(&["gen", "--n", "5", "--d", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn run_writes_trace_json() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = rumor(&[
        "run", "--n", "1000", "--d", "3", "--seed", "1", "--mode", "incremental", "--phase-power", "2",
        "--trace", trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("violations=0"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(v["mode"], "incremental");
    assert_eq!(v["seed"], 1);
    assert!(v["T"].as_u64().unwrap() >= 10);
    assert!(v["T0"].as_u64().unwrap() <= v["T1"].as_u64().unwrap());
    let first = &v["rounds"][0];
    assert_eq!(first["t"], 1);
    assert_eq!(first["I"].as_u64().unwrap() + first["U"].as_u64().unwrap(), 1000);
    assert_eq!(first["H"].as_array().unwrap().len(), 3);

    let o = rumor(&[
        "run", "--graph", fixture("petersen.adj").to_str().unwrap(), "--start", "3", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(v["mode"], "static");
    assert!(v["rounds"][0]["P"].is_null() && v["rounds"][0]["H"].is_null());
    assert!(v["T"].as_u64().unwrap() >= 4);
}

#[test]
fn theory_prints_header_and_rows() {
    let o = rumor(&["theory", "--n", "100000", "--d", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# C_d=4.29816"));
    assert!(text.contains("\nt,p,u,f,r\n0,3,99999,"));
    let o = rumor(&["theory", "--n", "100000", "--d", "3", "--p0", "3000", "--u0", "90000"]);
    assert!(stdout(&o).contains("\n0,3000,90000,"));
}

#[test]
fn spectral_and_typicality_json() {
    let o = rumor(&["spectral", "--graph", fixture("petersen.adj").to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["ramanujan"], true);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 10);

    let o = rumor(&["typicality", "--graph", fixture("k4.adj").to_str().unwrap(), "--eps", "0.5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exhaustive"], true);
    assert_eq!(v["condition3"]["sampled"], 16);
}

#[test]
fn bounds_subcommands() {
    let o = rumor(&["bounds", "chernoff", "--mu", "100", "--t", "30"]);
    assert!(stdout(&o).starts_with("bound=0.0334"));
    assert!(stdout(&o).contains("informative=true"));
    let o = rumor(&["bounds", "talagrand", "--m", "100", "--t", "50", "--r", "3", "--c", "2"]);
    assert!(stdout(&o).contains("bound=1 informative=false"));
    let o = rumor(&["bounds", "chernoff", "--mu", "-1", "--t", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("k4.adj"), dir.path().join("k4.adj")).unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"cells":[{"kind":"random-regular","n":4,"d":3},{"kind":"file","path":"k4.adj"},
            {"kind":"random-regular","n":40,"d":3,"mode":"incremental"}],
            "runs":10,"seed":9,"retain":"full","full_traces":2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = rumor(&["sweep", "--spec", spec.to_str().unwrap(), "--workers", "2", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("n,d,runs,meanT,medianT,stdT,C_hat,C_d,rel_gap\n4,3,10,"));
    assert_eq!(csv.lines().count(), 4);
    let runs = std::fs::read_to_string(out.join("runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 30);
    for line in runs.lines().take(10) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["T"].as_u64().unwrap() >= 2);
    }
    assert!(out.join("traces/cell2_run1.json").exists());
    assert!(!out.join("traces/cell2_run2.json").exists());

    std::fs::write(&spec, r#"{"cells":[{"kind":"random-regular","n":5,"d":3}],"runs":1,"seed":1}"#).unwrap();
    let o = rumor(&["sweep", "--spec", spec.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cell 0"));
}
