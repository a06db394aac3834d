#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const IDEA: &str = "Write a Python3 GUI color meter that outputs the RGB values when it moves.";

pub fn sopforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sopforge"))
        .args(args)
        .env_remove("SOPFORGE_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs the bundled demo into `workspace`, with extra flags appended.
pub fn demo_run(workspace: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--idea",
        IDEA,
        "--workspace",
        path_str(workspace),
        "--backend",
        "playbook",
    ];
    args.extend_from_slice(extra);
    sopforge(&args)
}

/// `cause_by` of every line in a workspace's message log.
pub fn logged_actions(workspace: &Path) -> Vec<String> {
    std::fs::read_to_string(workspace.join("logs/messages.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["cause_by"].as_str().unwrap().to_string()
        })
        .collect()
}
