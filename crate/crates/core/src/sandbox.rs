//! Running generated programs and their tests in throwaway directories.
//!
//! Each run gets a fresh temporary directory, a scrubbed environment, a
//! wall-clock limit enforced by killing the whole process group, and a cap on
//! captured output. A semaphore bounds how many children run at once.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::model::{check_relative_path, CodeArtifact, TestCounts};

pub const TRUNCATION_MARKER: &str = "\n[output truncated]\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    NonZeroExit,
    TimedOut,
    SpawnError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    /// Wall-clock seconds.
    pub duration: f64,
    /// Filled only when a test harness reported structured counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_counts: Option<TestCounts>,
    /// The directory the run used. Removed once the run finishes.
    #[serde(skip)]
    pub run_dir: PathBuf,
}

impl ExecutionResult {
    fn spawn_error(message: String, run_dir: PathBuf, started: Instant) -> Self {
        ExecutionResult {
            status: ExecStatus::SpawnError,
            exit_code: None,
            stdout: String::new(),
            stderr: message,
            duration: started.elapsed().as_secs_f64(),
            test_counts: None,
            run_dir,
        }
    }

    /// Exit 0 and, when counts are known, no failures or errors.
    pub fn passed(&self) -> bool {
        self.status == ExecStatus::Ok
            && self
                .test_counts
                .is_none_or(|c| c.failed == 0 && c.errored == 0)
    }

    /// One-line description used in debug prompts and reports.
    pub fn summary(&self) -> String {
        let mut s = format!("{:?}", self.status);
        if let Some(code) = self.exit_code {
            s.push_str(&format!(", exit {code}"));
        }
        if let Some(c) = self.test_counts {
            s.push_str(&format!(
                ", {} passed / {} failed / {} errored",
                c.passed, c.failed, c.errored
            ));
        }
        if let Some(last) = self.stderr.lines().rev().find(|l| !l.trim().is_empty()) {
            s.push_str(&format!(", last stderr line: {}", last.trim()));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecLimits {
    pub timeout: Duration,
    pub max_output_bytes: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            timeout: Duration::from_secs(30),
            max_output_bytes: 1024 * 1024,
        }
    }
}

impl ExecLimits {
    pub fn with_timeout(timeout: Duration) -> Self {
        ExecLimits {
            timeout,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.timeout.is_zero() {
            return Err("timeout must be positive".into());
        }
        Ok(())
    }
}

/// JSON line printed by the test harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShimReport {
    pub status: ShimStatus,
    pub passed: u32,
    pub failed: u32,
    pub errored: u32,
    #[serde(default)]
    pub failures: Vec<ShimFailure>,
    #[serde(default)]
    pub duration: f64,
    /// Anything the module under test printed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdout: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShimStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShimFailure {
    #[serde(alias = "name")]
    pub test: String,
    pub traceback: String,
}

impl ShimReport {
    /// Reads the last non-blank stdout line as a report.
    pub fn from_stdout(stdout: &str) -> Option<ShimReport> {
        let line = stdout.lines().rev().find(|l| !l.trim().is_empty())?;
        serde_json::from_str(line).ok()
    }

    pub fn counts(&self) -> TestCounts {
        TestCounts {
            passed: self.passed,
            failed: self.failed,
            errored: self.errored,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxConfig {
    /// Interpreter substituted for `{interp}`.
    pub interpreter: String,
    /// Test harness program; when set and present, tests run through it.
    pub harness: Option<PathBuf>,
    pub run_template: String,
    pub shim_template: String,
    /// Environment variables passed through to children.
    pub env_allowlist: Vec<String>,
    pub max_concurrent: usize,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            interpreter: "python3".into(),
            harness: None,
            run_template: "{interp} {file}".into(),
            shim_template: "{interp} {harness} --module {file} --tests {testfile}".into(),
            env_allowlist: ["PATH", "LANG", "LC_ALL", "LC_CTYPE", "TZ", "SYSTEMROOT"]
                .map(String::from)
                .to_vec(),
            max_concurrent: 4,
        }
    }
}

/// Expands a whitespace-separated command template. Placeholders are
/// replaced per argument; no shell is involved.
pub fn expand_template(template: &str, vars: &[(&str, &str)]) -> Vec<String> {
    template
        .split_whitespace()
        .map(|arg| {
            vars.iter().fold(arg.to_string(), |acc, (key, value)| {
                acc.replace(&format!("{{{key}}}"), value)
            })
        })
        .collect()
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Bytes still allowed across stdout and stderr together.
struct OutputBudget {
    remaining: Mutex<usize>,
}

fn capture<R: Read + Send + 'static>(
    mut reader: R,
    budget: Arc<OutputBudget>,
) -> thread::JoinHandle<(Vec<u8>, bool)> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut truncated = false;
        let mut buf = [0u8; 8192];
        loop {
            let n = match reader.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => n,
            };
            let mut remaining = budget.remaining.lock().unwrap_or_else(|e| e.into_inner());
            let take = n.min(*remaining);
            *remaining -= take;
            drop(remaining);
            kept.extend_from_slice(&buf[..take]);
            if take < n {
                truncated = true;
            }
        }
        (kept, truncated)
    })
}

/// Decodes captured bytes, dropping a multi-byte character cut by the cap.
fn decode(mut bytes: Vec<u8>) -> String {
    if let Err(e) = std::str::from_utf8(&bytes) {
        if e.error_len().is_none() {
            bytes.truncate(e.valid_up_to());
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    // The child leads its own process group, so this reaches grandchildren.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    let _ = child.kill();
}

pub struct Sandbox {
    config: SandboxConfig,
    permits: Semaphore,
}

impl Default for Sandbox {
    fn default() -> Self {
        Self::new(SandboxConfig::default())
    }
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Self {
        let permits = Semaphore::new(config.max_concurrent);
        Sandbox { config, permits }
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// The harness path, if one is configured and exists.
    pub fn shim(&self) -> Option<&Path> {
        self.config.harness.as_deref().filter(|p| p.is_file())
    }

    /// Writes `files` into a fresh directory and runs `argv` there.
    ///
    /// Failures to start (including a missing program) come back as
    /// [`ExecStatus::SpawnError`] rather than as an `Err`.
    pub fn execute_raw(
        &self,
        files: &[CodeArtifact],
        argv: &[String],
        limits: &ExecLimits,
    ) -> ExecutionResult {
        let started = Instant::now();
        let dir = match tempfile::Builder::new().prefix("sopforge-run-").tempdir() {
            Ok(d) => d,
            Err(e) => {
                return ExecutionResult::spawn_error(
                    format!("cannot create run directory: {e}"),
                    PathBuf::new(),
                    started,
                )
            }
        };
        let run_dir = dir.path().to_path_buf();
        let fail = |msg: String| ExecutionResult::spawn_error(msg, run_dir.clone(), started);

        if let Err(e) = limits.validate() {
            return fail(e);
        }
        let Some((program, args)) = argv.split_first() else {
            return fail("empty command".into());
        };
        for file in files {
            if let Err(e) = materialize(&run_dir, file) {
                return fail(e);
            }
        }

        let _permit = self.permits.acquire();
        let mut cmd = Command::new(program);
        cmd.args(args)
            .current_dir(&run_dir)
            .env_clear()
            .env("HOME", &run_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        for key in &self.config.env_allowlist {
            if let Some(value) = std::env::var_os(key) {
                cmd.env(key, value);
            }
        }
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }

        let started = Instant::now();
        let mut child = match cmd.spawn() {
            Ok(c) => c,
            Err(e) => return fail(format!("failed to spawn {program:?}: {e}")),
        };
        let budget = Arc::new(OutputBudget {
            remaining: Mutex::new(limits.max_output_bytes),
        });
        let out = capture(child.stdout.take().expect("piped"), Arc::clone(&budget));
        let err = capture(child.stderr.take().expect("piped"), budget);

        let (status, exit_code) = match child.wait_timeout(limits.timeout) {
            Ok(Some(st)) => {
                let code = st.code();
                if code == Some(0) {
                    (ExecStatus::Ok, code)
                } else {
                    (ExecStatus::NonZeroExit, code)
                }
            }
            Ok(None) => {
                kill_tree(&mut child);
                let _ = child.wait();
                (ExecStatus::TimedOut, None)
            }
            Err(e) => {
                kill_tree(&mut child);
                let _ = child.wait();
                return fail(format!("waiting on child failed: {e}"));
            }
        };
        // Kill stragglers that might still hold the pipes open.
        #[cfg(unix)]
        unsafe {
            libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
        }
        let duration = started.elapsed().as_secs_f64();

        let (out_bytes, out_cut) = out.join().unwrap_or_default();
        let (err_bytes, err_cut) = err.join().unwrap_or_default();
        let mut stdout = decode(out_bytes);
        let mut stderr = decode(err_bytes);
        if out_cut {
            stdout.push_str(TRUNCATION_MARKER);
        } else if err_cut {
            stderr.push_str(TRUNCATION_MARKER);
        }

        ExecutionResult {
            status,
            exit_code,
            stdout,
            stderr,
            duration,
            test_counts: None,
            run_dir,
        }
    }

    pub fn execute_tests(
        &self,
        module: &CodeArtifact,
        tests: &CodeArtifact,
        limits: &ExecLimits,
    ) -> ExecutionResult {
        self.execute_tests_with(module, tests, &[], limits)
    }

    /// Runs `tests` against `module`, with `support` files alongside.
    ///
    /// With a harness installed the run goes through it and test counts are
    /// read from its report; otherwise the test file runs directly and only
    /// the exit code decides.
    pub fn execute_tests_with(
        &self,
        module: &CodeArtifact,
        tests: &CodeArtifact,
        support: &[CodeArtifact],
        limits: &ExecLimits,
    ) -> ExecutionResult {
        let mut files: Vec<CodeArtifact> = support
            .iter()
            .filter(|f| f.file_name != module.file_name && f.file_name != tests.file_name)
            .cloned()
            .collect();
        files.push(module.clone());
        files.push(tests.clone());

        let interp = self.config.interpreter.as_str();
        match self.shim() {
            Some(harness) => {
                let harness = harness.to_string_lossy();
                let argv = expand_template(
                    &self.config.shim_template,
                    &[
                        ("interp", interp),
                        ("harness", &harness),
                        ("file", &module.file_name),
                        ("testfile", &tests.file_name),
                    ],
                );
                let mut result = self.execute_raw(&files, &argv, limits);
                if let Some(report) = ShimReport::from_stdout(&result.stdout) {
                    result.test_counts = Some(report.counts());
                }
                result
            }
            None => {
                let argv = expand_template(
                    &self.config.run_template,
                    &[("interp", interp), ("file", &tests.file_name)],
                );
                self.execute_raw(&files, &argv, limits)
            }
        }
    }
}

fn materialize(root: &Path, file: &CodeArtifact) -> Result<(), String> {
    check_relative_path(&file.file_name).map_err(|e| e.to_string())?;
    let path = root.join(&file.file_name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    fs::write(&path, &file.code).map_err(|e| format!("{}: {e}", path.display()))
}
