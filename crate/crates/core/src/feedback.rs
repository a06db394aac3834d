//! Run tests, hand failures back to the model, retry.
//!
//! The first execution is attempt 0. Each failure after it costs one retry:
//! the engineer gets the failing output plus the requirement, design and
//! current code, and must answer with the whole revised file. After
//! [`MAX_RETRIES`] retries the loop gives up, so a file is executed at most
//! four times. Tests stay frozen for the whole loop.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::llm::{extract_code_blocks, CompletionRequest, Gateway, LlmError};
use crate::model::{ActionKind, CodeArtifact, CodeStatus, TestOutcome, TestReport};
use crate::sandbox::{ExecLimits, ExecStatus, ExecutionResult, Sandbox};

pub const MAX_RETRIES: u32 = 3;
/// Characters of the latest stderr kept in a debug prompt.
pub const STDERR_BUDGET: usize = 4000;
const EXCERPT_BUDGET: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackStatus {
    Pending,
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackState {
    pub artifact: CodeArtifact,
    pub tests: CodeArtifact,
    pub attempts: Vec<ExecutionResult>,
    pub retries_used: u32,
    pub status: FeedbackStatus,
}

impl FeedbackState {
    pub fn new(artifact: CodeArtifact, tests: CodeArtifact) -> Self {
        FeedbackState {
            artifact,
            tests,
            attempts: Vec::new(),
            retries_used: 0,
            status: FeedbackStatus::Pending,
        }
    }

    pub fn report(&self) -> TestReport {
        let last = self.attempts.last();
        let passed = self.status == FeedbackStatus::Passed;
        TestReport {
            module: self.artifact.file_name.clone(),
            test_file: self.tests.file_name.clone(),
            outcome: if passed {
                TestOutcome::Passed
            } else {
                TestOutcome::Failed
            },
            executions: self.attempts.len(),
            retries_used: self.retries_used,
            final_revision: self.artifact.revision,
            exit_code: last.and_then(|r| r.exit_code),
            test_counts: last.and_then(|r| r.test_counts),
            failure_excerpt: (!passed)
                .then(|| last.map(|r| tail_chars(&r.stderr, 500).0))
                .flatten(),
        }
    }
}

/// What the debug prompt quotes besides the code itself.
#[derive(Debug, Clone, Default)]
pub struct FeedbackContext {
    pub requirement: String,
    pub design: String,
    /// Other project files needed for the tests to import.
    pub support_files: Vec<CodeArtifact>,
    /// Role name used for requests and ledger attribution.
    pub role: String,
    pub system_prompt: String,
    pub temperature: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum FeedbackError {
    #[error("sandbox could not run the tests: {0}")]
    SandboxUnavailable(String),
    #[error("debug request failed: {source}")]
    Backend {
        source: LlmError,
        state: Box<FeedbackState>,
    },
    #[error("debug response for {file} had no fenced code block")]
    NoCodeBlock {
        file: String,
        state: Box<FeedbackState>,
    },
    #[error("empty artifact or tests")]
    EmptyInput,
}

/// Where each attempt's code and result get written.
#[derive(Debug, Clone)]
pub struct AttemptRecorder {
    root: PathBuf,
}

#[derive(Serialize)]
struct AttemptRecord<'a> {
    revision: u32,
    result: &'a ExecutionResult,
}

impl AttemptRecorder {
    /// `root` is typically `<workspace>/logs/feedback`.
    pub fn new(root: impl Into<PathBuf>) -> Self {
        AttemptRecorder { root: root.into() }
    }

    pub fn attempt_dir(&self, file: &str, n: usize) -> PathBuf {
        self.root.join(file).join(format!("attempt_{n}"))
    }

    fn record(&self, artifact: &CodeArtifact, n: usize, result: &ExecutionResult) -> io::Result<()> {
        let dir = self.attempt_dir(&artifact.file_name, n);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(artifact.base_name()), &artifact.code)?;
        let record = AttemptRecord {
            revision: artifact.revision,
            result,
        };
        let json = serde_json::to_string_pretty(&record).map_err(io::Error::other)?;
        fs::write(dir.join("result.json"), json + "\n")
    }
}

/// Returns the last `budget` characters and whether anything was cut.
fn tail_chars(text: &str, budget: usize) -> (String, bool) {
    let count = text.chars().count();
    if count <= budget {
        return (text.to_string(), false);
    }
    (text.chars().skip(count - budget).collect(), true)
}

fn head_chars(text: &str, budget: usize) -> String {
    let mut out: String = text.chars().take(budget).collect();
    if out.len() < text.len() {
        out.push_str("\n[...]");
    }
    out
}

/// The stderr section of a debug prompt: the last [`STDERR_BUDGET`]
/// characters, prefixed with a marker when cut.
pub fn stderr_excerpt(stderr: &str) -> String {
    match tail_chars(stderr, STDERR_BUDGET) {
        (tail, false) => tail,
        (tail, true) => format!(
            "[... truncated {} earlier characters ...]\n{tail}",
            stderr.chars().count() - STDERR_BUDGET
        ),
    }
}

/// Assembles the debug request. Order: requirement, design, current code,
/// frozen tests, the latest failure in full, then one line per earlier
/// attempt.
pub fn build_debug_prompt(state: &FeedbackState, ctx: &FeedbackContext) -> CompletionRequest {
    let last = state.attempts.last();
    let attempt_no = state.attempts.len().saturating_sub(1);
    let lang = &state.artifact.language_tag;
    let mut prompt = String::new();
    prompt.push_str("## Original requirement\n");
    prompt.push_str(&head_chars(&ctx.requirement, EXCERPT_BUDGET));
    prompt.push_str("\n\n## Design\n");
    prompt.push_str(&head_chars(&ctx.design, EXCERPT_BUDGET));
    prompt.push_str(&format!(
        "\n\n## Current code ({}, revision {})\n```{lang}\n{}\n```\n",
        state.artifact.file_name,
        state.artifact.revision,
        state.artifact.code.trim_end()
    ));
    prompt.push_str(&format!(
        "\n## Unit tests ({})\n```{lang}\n{}\n```\n",
        state.tests.file_name,
        state.tests.code.trim_end()
    ));
    if let Some(r) = last {
        prompt.push_str(&format!("\n## Latest failure (attempt {attempt_no}: {:?}", r.status));
        if let Some(code) = r.exit_code {
            prompt.push_str(&format!(", exit {code}"));
        }
        if let Some(c) = r.test_counts {
            prompt.push_str(&format!(
                ", {} passed / {} failed / {} errored",
                c.passed, c.failed, c.errored
            ));
        }
        prompt.push_str(")\n");
        prompt.push_str(&stderr_excerpt(&r.stderr));
        prompt.push('\n');
    }
    let earlier = &state.attempts[..state.attempts.len().saturating_sub(1)];
    if !earlier.is_empty() {
        prompt.push_str("\n## Earlier attempts\n");
        for (i, r) in earlier.iter().enumerate() {
            prompt.push_str(&format!("- attempt {i}: {}\n", r.summary()));
        }
    }
    prompt.push_str(&format!(
        "\n## Instructions\nFix {} so the unit tests pass. Return the complete revised file in a single fenced code block. Do not change the tests.\n",
        state.artifact.file_name
    ));

    let system = if ctx.system_prompt.trim().is_empty() {
        "You are an engineer debugging your own code.".to_string()
    } else {
        ctx.system_prompt.clone()
    };
    let role = if ctx.role.is_empty() { "Engineer" } else { &ctx.role };
    let mut req = CompletionRequest::new(role, ActionKind::DebugCode, system, prompt);
    req.temperature = ctx.temperature;
    req
}

/// Runs the tests and repairs the artifact until it passes or the retry cap
/// is reached. Every attempt's result stays in the returned state.
pub fn feedback_loop(
    artifact: CodeArtifact,
    tests: CodeArtifact,
    ctx: &FeedbackContext,
    gateway: &Gateway,
    sandbox: &Sandbox,
    limits: &ExecLimits,
    recorder: Option<&AttemptRecorder>,
) -> Result<FeedbackState, FeedbackError> {
    if artifact.code.trim().is_empty() || tests.code.trim().is_empty() {
        return Err(FeedbackError::EmptyInput);
    }
    let mut state = FeedbackState::new(artifact, tests);
    loop {
        let result =
            sandbox.execute_tests_with(&state.artifact, &state.tests, &ctx.support_files, limits);
        if result.status == ExecStatus::SpawnError {
            return Err(FeedbackError::SandboxUnavailable(result.stderr));
        }
        if let Some(rec) = recorder {
            if let Err(e) = rec.record(&state.artifact, state.attempts.len(), &result) {
                log::warn!("could not persist feedback attempt: {e}");
            }
        }
        let passed = result.passed();
        state.attempts.push(result);
        if passed {
            state.status = FeedbackStatus::Passed;
            state.artifact.status = CodeStatus::TestedPass;
            return Ok(state);
        }
        if state.retries_used == MAX_RETRIES {
            state.status = FeedbackStatus::Failed;
            state.artifact.status = CodeStatus::TestedFail;
            return Ok(state);
        }

        let req = build_debug_prompt(&state, ctx);
        let response = match gateway.complete(&req) {
            Ok(r) => r,
            Err(source) => {
                return Err(FeedbackError::Backend {
                    source,
                    state: Box::new(state),
                })
            }
        };
        let Some(block) = extract_code_blocks(&response.text)
            .into_iter()
            .find(|b| !b.code.trim().is_empty())
        else {
            return Err(FeedbackError::NoCodeBlock {
                file: state.artifact.file_name.clone(),
                state: Box::new(state),
            });
        };
        state.artifact = state.artifact.revise(block.code);
        state.retries_used += 1;
    }
}

/// Directory under which a workspace keeps attempt records.
pub fn feedback_root(workspace: &Path) -> PathBuf {
    workspace.join("logs").join("feedback")
}
