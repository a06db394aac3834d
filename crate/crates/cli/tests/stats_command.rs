mod common;

use std::fs;

use common::*;

#[test]
fn productivity_is_tokens_per_counted_line() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    assert_eq!(code(&demo_run(&ws, &[])), 0);

    let ledger: serde_json::Value = serde_json::from_str(&fs::read_to_string(ws.join("ledger.json")).unwrap()).unwrap();
    let tokens = ledger["totals"]["prompt_tokens"].as_u64().unwrap() + ledger["totals"]["completion_tokens"].as_u64().unwrap();
    let mut lines = 0usize;
    let mut files = 0usize;
    for entry in fs::read_dir(ws.join("src")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        files += 1;
        lines += text.lines().count();
    }

    let out = sopforge(&["stats", "--workspace", path_str(&ws), "--executability", "3", "--revisions", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[0], "3");
    assert_eq!(row[2].parse::<usize>().unwrap() as u64, tokens);
    assert_eq!(row[3].parse::<usize>().unwrap(), files);
    assert_eq!(row[5].parse::<usize>().unwrap(), lines);
    let productivity: f64 = row[6].parse().unwrap();
    assert!((productivity - tokens as f64 / lines as f64).abs() < 0.05);
    assert_eq!(row[7], "1");
}

#[test]
fn human_scores_are_optional() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    assert_eq!(code(&demo_run(&ws, &["--roles", "engineer"])), 0);
    let out = sopforge(&["stats", "--workspace", path_str(&ws)]);
    assert_eq!(code(&out), 0);
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("-\t"));
    assert!(row.ends_with("\t-"));
}

#[test]
fn missing_sources_exit_66() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ledger.json"), "{}").unwrap();
    assert_eq!(code(&sopforge(&["stats", "--workspace", path_str(dir.path())])), 66);
}

#[test]
fn out_of_range_scores_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    assert_eq!(code(&demo_run(&ws, &["--roles", "engineer"])), 0);
    assert_eq!(code(&sopforge(&["stats", "--workspace", path_str(&ws), "--executability", "4.5"])), 64);
    assert_eq!(code(&sopforge(&["stats", "--workspace", path_str(&ws), "--revisions", "-1"])), 64);
}
