//! End-to-end runs of the `ndsp` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ndsp(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ndsp"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("NDSP_WORKERS", w),
        None => cmd.env_remove("NDSP_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit status")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn single_point_relationship() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write(
        tmp.path(),
        "single.json",
        &format!(
            r#"{{"version": 1, "system": "single-point:phi=0.3",
                "schedules": {{"epsSchedule": [0.5, 0.1], "nSchedule": [1, 2, 3, 4]}},
                "tasks": ["relationship", "pesin"],
                "output": {{"dir": {:?}}}}}"#,
            out_dir.to_string_lossy()
        ),
    );
    let out = ndsp(&["run", &cfg], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
    let rel = json(&out_dir, "01-relationship.json");
    assert_eq!(rel["verdict"], "pass");
    for kind in ["classical", "classicalSpanning", "pesin", "packing", "capacityUpper", "capacityLower"] {
        assert!((num(&rel["report"][kind]["value"]) - 0.3).abs() < 1e-6, "{kind}");
    }
    let csv = read(&out_dir, "02-pesin.csv");
    assert!(csv.starts_with("kind,eps,N,raw,normalized\n"));
    assert!(out_dir.join("02-pesin.json").exists());
}

#[test]
fn shift_relationship_and_billingsley_from_toml() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("o");
    let cfg = write(
        tmp.path(),
        "shift.toml",
        r#"
version = 1
system = "cyclic-shift:L=12"
potential = "zero"
measure = { bernoulli = 0.5 }
tasks = [
  "relationship",
  { task = "billingsley", s = 0.743147, direction = "upper-le" },
  { task = "billingsley", s = 0.643147, direction = "lower-ge" },
]

[schedules]
epsSchedule = [0.5]
nSchedule = [1, 2, 3, 4, 5, 6, 7, 8]
N = 4
Nmax = 8
"#,
    );
    let out = ndsp(&["run", &cfg, "--out", &out_dir.to_string_lossy()], Some("2"));
    assert_eq!(code(&out), 0, "{}\n{}", stdout(&out), stderr(&out));
    let b = json(&out_dir, "02-billingsley.json");
    assert_eq!(b["report"]["outcome"], "confirmed");
    let b = json(&out_dir, "03-billingsley.json");
    assert_eq!(b["report"]["outcome"], "confirmed");
}

#[test]
fn config_errors_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let long = write(
        tmp.path(),
        "long.json",
        r#"{"version": 1, "system": "cyclic-shift:L=6", "schedules": {"epsSchedule": [0.5], "nSchedule": [2, 4, 8]}, "tasks": ["pesin"]}"#,
    );
    let out = ndsp(&["run", &long], None);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("schedules.nSchedule"), "{}", stderr(&out));

    let empty = write(
        tmp.path(),
        "empty.json",
        r#"{"version": 1, "system": "single-point", "schedules": {"epsSchedule": [0.5], "nSchedule": [1]}, "tasks": []}"#,
    );
    let out = ndsp(&["run", &empty], None);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`tasks`"));

    let out = ndsp(&["run", &tmp.path().join("missing.json").to_string_lossy()], None);
    assert_eq!(code(&out), 1);
}

#[test]
fn seed_is_rejected_and_workers_are_checked() {
    let out = ndsp(&["describe", "single-point", "--seed", "3"], None);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--seed"));
    let out = ndsp(&["describe", "single-point"], Some("zero"));
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("NDSP_WORKERS"));
    let out = ndsp(&["frobnicate"], None);
    assert_eq!(code(&out), 1);
}

#[test]
fn describe_prints_json() {
    let out = ndsp(&["describe", "cyclic-shift:L=8"], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["points"], 256);
    assert_eq!(v["maxHorizon"], 8);
    assert_eq!(v["coding"]["alphabet"], 2);
    let out = ndsp(&["describe", "circle-grid:q=7"], None);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("system.steps"));
}

#[test]
fn unmet_hypotheses_are_reported_not_failed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "hyp.json",
        &format!(
            r#"{{"version": 1, "system": "cyclic-shift:L=8", "potential": "zero", "measure": {{"bernoulli": 0.5}},
                "schedules": {{"epsSchedule": [0.5], "nSchedule": [4, 5, 6], "N": 4, "Nmax": 6}},
                "tasks": [{{"task": "billingsley", "s": 0.2, "direction": "upper-le"}}],
                "output": {{"dir": {:?}}}}}"#,
            tmp.path().join("o").to_string_lossy()
        ),
    );
    let out = ndsp(&["run", &cfg], None);
    assert_eq!(code(&out), 0, "{}\n{}", stdout(&out), stderr(&out));
    let b = json(&tmp.path().join("o"), "01-billingsley.json");
    assert_eq!(b["report"]["outcome"], "hypothesisFailed");
}

#[test]
fn tight_chain_tolerance_exits_two() {
    // On this rotation grid the capacity and spanning estimates differ at
    // finite scale, so a near-zero chain tolerance must fail.
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "tight.json",
        &format!(
            r#"{{"version": 1, "system": "circle-grid:q=12,steps=1;5",
                "schedules": {{"epsSchedule": [0.3], "nSchedule": [2, 4, 6, 8], "chainTol": 1e-12}},
                "tasks": ["relationship"],
                "output": {{"dir": {:?}}}}}"#,
            tmp.path().join("o").to_string_lossy()
        ),
    );
    let out = ndsp(&["run", &cfg], None);
    assert_eq!(code(&out), 2, "{}\n{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("FAIL"));
    let rel = json(&tmp.path().join("o"), "01-relationship.json");
    assert_eq!(rel["verdict"], "fail");
    assert!(rel["report"]["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}

#[test]
fn oracle_compare_hashes_and_capacity() {
    let tmp = TempDir::new().unwrap();
    let small = write(
        tmp.path(),
        "small.json",
        &format!(
            r#"{{"version": 1,
                "system": {{"family": "inline", "geometry": {{"line": [0.0, 0.4, 0.9, 1.5, 1.6]}}, "tables": [[1, 2, 3, 4, 0], [4, 3, 2, 1, 0]]}},
                "potential": [0.2, -0.5, 0.1, 0.7, -0.3],
                "schedules": {{"epsSchedule": [0.7, 0.45], "nSchedule": [1, 2, 3]}},
                "tasks": [{{"task": "oracle-compare", "s": [-0.5, 0.0, 0.8]}}],
                "output": {{"dir": {:?}}}}}"#,
            tmp.path().join("a").to_string_lossy()
        ),
    );
    let out = ndsp(&["oracle-compare", &small], Some("1"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let a = json(&tmp.path().join("a"), "01-oracle-compare.json");
    let hash = a["report"]["instanceHash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(a["report"]["rows"].as_array().unwrap().len(), 2 * 4 * 3 * 2);
    let out = ndsp(&["oracle-compare", &small, "--out", &tmp.path().join("b").to_string_lossy()], Some("4"));
    assert_eq!(code(&out), 0);
    assert_eq!(read(&tmp.path().join("a"), "01-oracle-compare.json"), read(&tmp.path().join("b"), "01-oracle-compare.json"));

    let big = write(
        tmp.path(),
        "big.json",
        r#"{"version": 1, "system": "cyclic-shift:L=8", "schedules": {"epsSchedule": [0.5], "nSchedule": [3]}, "tasks": ["oracle-compare"]}"#,
    );
    let out = ndsp(&["oracle-compare", &big, "--out", &tmp.path().join("c").to_string_lossy()], None);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("capacity"));
}

#[test]
fn outputs_are_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "det.toml",
        r#"
version = 1
system = "circle-grid:q=24,steps=1;5;7"
potential = { cosine = 1.0 }
measure = "uniform"
tasks = ["relationship", "local", { task = "measure-pressure", kind = "pesin" }, "nonwandering"]

[schedules]
epsSchedule = [0.3, 0.1]
nSchedule = [1, 2, 3, 4, 5, 6]
"#,
    );
    let mut runs = Vec::new();
    for w in ["1", "3", "8"] {
        let dir = tmp.path().join(format!("w{w}"));
        let out = ndsp(&["run", &cfg, "--out", &dir.to_string_lossy()], Some(w));
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let mut files: Vec<(String, String)> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read_to_string(e.path()).unwrap())
            })
            .collect();
        files.sort();
        runs.push(files);
    }
    assert_eq!(runs[0].len(), 7);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    // 17 significant digits.
    assert!(runs[0].iter().any(|(_, text)| text.contains("e-1") || text.contains("e0")));
}

#[test]
fn verify_single_criterion() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("r/verify.json");
    let out = ndsp(&["verify", "--criteria", "1,5", "--out", &path.to_string_lossy()], Some("2"));
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 2);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn shipped_configs_run_cleanly() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = TempDir::new().unwrap();
    for name in ["single-point.json", "full-shift.toml", "rotation-limit.toml"] {
        let dir = tmp.path().join(name);
        let out = ndsp(&["run", &configs.join(name).to_string_lossy(), "--out", &dir.to_string_lossy()], None);
        assert_eq!(code(&out), 0, "{name}\n{}\n{}", stdout(&out), stderr(&out));
        assert!(std::fs::read_dir(&dir).unwrap().count() > 0);
    }
}
