use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const CASE_1: &str = "There is no correlation between blood pressure attributions and serum triglycerides attributions";
const CASE_2: &str =
    "The number of patients with positive attribution for blood pressure is greater than the number with negative attribution";

fn xlint() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xlint"))
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let table = xlint_core::synthetic::diabetes_table(7);
        fs::write(dir.path().join("diabetes.json"), xlint_core::attribution::to_json(&table)).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn insights(&self, lines: &[&str]) -> PathBuf {
        let path = self.path("insights.txt");
        fs::write(&path, lines.join("\n")).unwrap();
        path
    }

    fn check(&self, insights: &Path, extra: &[&str]) -> Output {
        xlint()
            .arg("check")
            .arg("--data")
            .arg(self.path("diabetes.json"))
            .arg("--insights")
            .arg(insights)
            .args(extra)
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn both_scenarios_exit_1() {
    let ws = Workspace::new();
    let out = ws.check(&ws.insights(&["# the two observations", CASE_1, "", CASE_2]), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("2: supported"), "{}", lines[0]);
    assert!(lines[1].starts_with("4: refuted"), "{}", lines[1]);
}

#[test]
fn all_supported_exits_0() {
    let ws = Workspace::new();
    let out = ws.check(&ws.insights(&[CASE_1]), &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unresolved_outranks_refuted() {
    let ws = Workspace::new();
    let out = ws.check(&ws.insights(&[CASE_2, "colorless green ideas"]), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("2: error"));

    let incomplete = "The mean attribution of bmi is greater than some amount";
    let out = ws.check(&ws.insights(&[CASE_1, incomplete]), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
}

#[test]
fn usage_errors_exit_64() {
    let ws = Workspace::new();
    let insights = ws.insights(&[CASE_1]);
    let out = xlint()
        .args(["check", "--data", "/definitely/not/here.csv", "--insights"])
        .arg(&insights)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(xlint().args(["check", "--bogus"]).output().unwrap().status.code(), Some(64));
    assert_eq!(xlint().output().unwrap().status.code(), Some(64));
    assert_eq!(xlint().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn json_output_stdin_documents_and_specs() {
    let ws = Workspace::new();
    let doc = serde_json::to_string(&xlint_core::insight::deserialize(
        r#"{"schema":"insight/v1","type":"read","variable":{"feature":"bmi","facet":"attribution","aggregator":"mean"},"comparator":">","threshold":-1000}"#,
    ).unwrap().to_value()).unwrap();
    let out_dir = ws.path("views");
    let mut child = xlint()
        .arg("check")
        .arg("--data")
        .arg(ws.path("diabetes.json"))
        .args(["--insights", "-", "--json", "--out-specs"])
        .arg(&out_dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.take().unwrap(), "{CASE_1}\n{doc}").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let reports: Vec<Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["status"] == "checked" && r["verdict"]["outcome"] == "supported"));
    assert_eq!(reports[0]["rule_id"], "correlation-scatter");

    let mut files: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        ["001-annotated.vl.json", "001-recommended.vl.json", "002-annotated.vl.json", "002-recommended.vl.json"]
    );
    let annotated: Value = serde_json::from_slice(&fs::read(out_dir.join("001-annotated.vl.json")).unwrap()).unwrap();
    assert!(annotated["$schema"].as_str().unwrap().contains("vega-lite"));
}

#[test]
fn a_custom_spec_can_be_given() {
    let ws = Workspace::new();
    let spec = xlint_core::vis::VisSpec::scatter(
        "demo",
        ("bp", xlint_core::insight::Facet::Attribution),
        ("s5", xlint_core::insight::Facet::Attribution),
    );
    fs::write(ws.path("spec.json"), serde_json::to_vec(&spec).unwrap()).unwrap();
    let spec_path = ws.path("spec.json");
    let out = ws.check(&ws.insights(&[CASE_1]), &["--json", "--spec", spec_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["rule_id"], "annotate-only");
}
