use std::path::PathBuf;
use std::time::{Duration, Instant};

use sopforge::model::CodeArtifact;
use sopforge::sandbox::{ExecLimits, ExecStatus, Sandbox, SandboxConfig};

fn py(name: &str, code: &str) -> CodeArtifact {
    CodeArtifact::draft(name, code, "python").unwrap()
}

fn argv(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

#[test]
fn infinite_loop_times_out_promptly() {
    let sandbox = Sandbox::default();
    let started = Instant::now();
    let r = sandbox.execute_raw(
        &[py("spin.py", "while True:\n    pass\n")],
        &argv(&["python3", "spin.py"]),
        &ExecLimits::with_timeout(Duration::from_secs(2)),
    );
    let elapsed = started.elapsed();
    assert_eq!(r.status, ExecStatus::TimedOut);
    assert!(!r.passed());
    assert!(elapsed < Duration::from_secs(3), "took {elapsed:?}");
    assert!(!r.run_dir.exists());
}

#[test]
fn concurrent_runs_use_disjoint_directories() {
    let sandbox = Sandbox::default();
    let script = py("where.py", "import os\nprint(os.getcwd())\nopen('mine.txt', 'w').write('x')\n");
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|_| {
                s.spawn(|| {
                    sandbox.execute_raw(
                        &[script.clone()],
                        &argv(&["python3", "where.py"]),
                        &ExecLimits::default(),
                    )
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut dirs: Vec<PathBuf> = results
        .iter()
        .map(|r| {
            assert_eq!(r.status, ExecStatus::Ok, "{}", r.stderr);
            let reported = PathBuf::from(r.stdout.trim());
            assert_eq!(
                reported.canonicalize().ok().or(Some(reported.clone())).unwrap().file_name(),
                r.run_dir.file_name()
            );
            r.run_dir.clone()
        })
        .collect();
    for d in &dirs {
        assert!(d.file_name().unwrap().to_string_lossy().starts_with("sopforge-run-"));
    }
    dirs.sort();
    dirs.dedup();
    assert_eq!(dirs.len(), 8);
}

const MODULE: &str = "def double(x):\n    return 2 * x\n";

fn test_file(body: &str) -> CodeArtifact {
    py(
        "test_calc.py",
        &format!("import unittest\nfrom calc import double\n\nclass T(unittest.TestCase):\n{body}\n\nif __name__ == '__main__':\n    unittest.main()\n"),
    )
}

#[test]
fn passing_failing_and_crashing_tests() {
    let sandbox = Sandbox::default();
    let limits = ExecLimits::default();
    let module = py("calc.py", MODULE);

    let ok = sandbox.execute_tests(&module, &test_file("    def test_ok(self):\n        self.assertEqual(double(2), 4)"), &limits);
    assert!(ok.passed(), "{}", ok.stderr);
    assert_eq!(ok.test_counts, None);

    let bad = sandbox.execute_tests(&module, &test_file("    def test_bad(self):\n        self.assertEqual(double(2), 5)"), &limits);
    assert_eq!(bad.status, ExecStatus::NonZeroExit);
    assert!(bad.stderr.contains("AssertionError"));

    let broken = py("calc.py", "def double(x)\n    return x\n");
    let crash = sandbox.execute_tests(&broken, &test_file("    def test_ok(self):\n        pass"), &limits);
    assert_eq!(crash.status, ExecStatus::NonZeroExit);
    assert!(crash.stderr.contains("SyntaxError"));
}

fn shim_sandbox() -> Sandbox {
    let harness = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fake_harness.py");
    Sandbox::new(SandboxConfig {
        harness: Some(harness),
        ..SandboxConfig::default()
    })
}

#[test]
fn harness_report_supplies_counts() {
    let sandbox = shim_sandbox();
    assert!(sandbox.shim().is_some());
    let limits = ExecLimits::default();
    let tests = test_file("    def test_ok(self):\n        pass");

    let ok = sandbox.execute_tests(&py("calc.py", MODULE), &tests, &limits);
    assert!(ok.passed());
    let counts = ok.test_counts.unwrap();
    assert_eq!((counts.passed, counts.failed, counts.errored), (1, 0, 0));

    let failing = sandbox.execute_tests(&py("fail_calc.py", MODULE), &tests, &limits);
    assert!(!failing.passed());
    assert_eq!(failing.exit_code, Some(1));
    assert_eq!(failing.test_counts.unwrap().failed, 1);

    let broken = sandbox.execute_tests(&py("broken_calc.py", MODULE), &tests, &limits);
    assert_eq!(broken.exit_code, Some(2));
    assert_eq!(broken.test_counts.unwrap().errored, 1);
}

#[test]
fn missing_harness_falls_back_to_raw_mode() {
    let sandbox = Sandbox::new(SandboxConfig {
        harness: Some(PathBuf::from("/nonexistent/harness.py")),
        ..SandboxConfig::default()
    });
    assert!(sandbox.shim().is_none());
    let r = sandbox.execute_tests(
        &py("calc.py", MODULE),
        &test_file("    def test_ok(self):\n        self.assertEqual(double(1), 2)"),
        &ExecLimits::default(),
    );
    assert!(r.passed(), "{}", r.stderr);
    assert_eq!(r.test_counts, None);
}
