#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

pub const DG90: &str = "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";
pub const DG90_FAULTY: &str = "OR (A, B; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";

/// Output I is 1 unless both feet are down.
pub fn dg90_spec() -> Value {
    let rows: Vec<Value> = [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 0)]
        .iter()
        .map(|(a, b, i)| json!({"in": {"A": a, "B": b}, "out": {"Output I": i}}))
        .collect();
    json!({"inputs": ["A", "B"], "outputs": ["Output I"], "rows": rows})
}

pub fn agent_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../agents/tests/fixtures")
}

/// Copies the DG90 project documents into `root/dg90`.
pub fn dg90_project(root: &Path) -> PathBuf {
    let proj = root.join("dg90");
    std::fs::create_dir_all(&proj).unwrap();
    for entry in std::fs::read_dir(agent_fixtures().join("projects/dg90")).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), proj.join(entry.file_name())).unwrap();
    }
    proj
}

pub fn fluidc(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_fluidc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(input) = stdin {
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

pub fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout={} stderr={}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

pub fn write(dir: &Path, name: &str, contents: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p.to_string_lossy().into_owned()
}
