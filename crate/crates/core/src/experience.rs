//! Long-term memory across projects. After a run each role summarizes what
//! it received into a short constraint, and later runs append those
//! constraints to the role's profile.

use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::llm::extract::extract_sections;
use crate::llm::{CompletionRequest, Gateway, LlmError};
use crate::model::{ActionKind, Message, MessageContent, RoleProfile};
use crate::sop::PromptTemplates;

/// Default cap on the constraints text after experience is loaded.
pub const CONSTRAINT_BUDGET: usize = 2000;
const PREVIEW_CHARS: usize = 400;

#[derive(Debug, thiserror::Error)]
pub enum ExperienceError {
    #[error("the role received no messages to reflect on")]
    EmptyTranscript,
    #[error("handover request failed: {0}")]
    Backend(#[from] LlmError),
    #[error("handover response had no usable summary")]
    EmptyResponse,
    #[error("experience store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("experience store line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperienceEntry {
    pub role: String,
    pub project_id: String,
    pub summary: String,
    pub constraint_delta: String,
    pub created_at: DateTime<Utc>,
}

/// Append-only JSONL file of [`ExperienceEntry`] values.
#[derive(Debug)]
pub struct ExperienceStore {
    path: PathBuf,
    lock: Mutex<()>,
}

impl ExperienceStore {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        ExperienceStore {
            path: path.into(),
            lock: Mutex::new(()),
        }
    }

    /// `<user data dir>/sopforge/experience.jsonl`.
    pub fn default_path() -> Option<PathBuf> {
        dirs::data_dir().map(|d| d.join("sopforge").join("experience.jsonl"))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &ExperienceEntry) -> Result<(), ExperienceError> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(parent) = self.path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let line = serde_json::to_string(entry).map_err(io::Error::other)?;
        writeln!(file, "{line}")?;
        Ok(())
    }

    /// Every entry in creation order. A missing file is an empty store.
    pub fn entries(&self) -> Result<Vec<ExperienceEntry>, ExperienceError> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let file = match fs::File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| ExperienceError::Corrupt {
                line: i + 1,
                reason: e.to_string(),
            })?);
        }
        Ok(out)
    }

    pub fn entries_for(&self, role: &str) -> Result<Vec<ExperienceEntry>, ExperienceError> {
        Ok(self
            .entries()?
            .into_iter()
            .filter(|e| e.role == role)
            .collect())
    }
}

fn preview(content: &MessageContent) -> String {
    let text = match content {
        MessageContent::Text(t) => t.clone(),
        MessageContent::Document(d) => d
            .sections
            .keys()
            .cloned()
            .collect::<Vec<_>>()
            .join(", "),
        MessageContent::Code(c) => format!("{} (revision {})", c.file_name, c.revision),
        MessageContent::TestReport(r) => format!(
            "{} {:?} after {} executions",
            r.module, r.outcome, r.executions
        ),
    };
    let mut chars = text.chars();
    let head: String = chars.by_ref().take(PREVIEW_CHARS).collect();
    if chars.next().is_some() {
        format!("{head} ...")
    } else {
        head
    }
}

/// One line per message: sequence, sender, action, and a short preview.
pub fn render_transcript(transcript: &[&Message]) -> String {
    transcript
        .iter()
        .map(|m| {
            format!(
                "[{}] {} ({}): {}",
                m.seq,
                m.sent_from,
                m.cause_by,
                preview(&m.content)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Asks the role to reflect on what it received and stores the resulting
/// constraint. A response with `## Summary` and `## Constraint update`
/// sections is split along them; otherwise the whole response is used for
/// both.
pub fn handover_feedback(
    role: &RoleProfile,
    transcript: &[&Message],
    project_id: &str,
    gateway: &Gateway,
    prompts: &PromptTemplates,
    store: &ExperienceStore,
) -> Result<ExperienceEntry, ExperienceError> {
    if transcript.is_empty() {
        return Err(ExperienceError::EmptyTranscript);
    }
    let user = prompts.user_prompt(
        ActionKind::HandoverFeedback,
        &[("transcript", &render_transcript(transcript))],
    );
    let req = CompletionRequest::new(
        role.name.clone(),
        ActionKind::HandoverFeedback,
        prompts.system_prompt(role),
        user,
    );
    let response = gateway.complete(&req)?.text;
    let sections = extract_sections(&response).entries;
    let whole = response.trim().to_string();
    let summary = sections
        .get("Summary")
        .filter(|s| !s.is_empty())
        .cloned()
        .unwrap_or_else(|| whole.clone());
    let delta = sections
        .get("Constraint update")
        .filter(|s| !s.is_empty())
        .cloned()
        .unwrap_or_else(|| whole.clone());
    if summary.is_empty() || delta.is_empty() {
        return Err(ExperienceError::EmptyResponse);
    }
    let entry = ExperienceEntry {
        role: role.name.clone(),
        project_id: project_id.to_string(),
        summary,
        constraint_delta: delta,
        created_at: Utc::now(),
    };
    store.append(&entry)?;
    Ok(entry)
}

/// `base` followed by this role's deltas, one per line, in creation order.
/// When the result would exceed `budget` characters the oldest deltas are
/// dropped first; `base` is always kept.
pub fn load_constraints(role: &str, base: &str, entries: &[ExperienceEntry], budget: usize) -> String {
    let deltas: Vec<&str> = entries
        .iter()
        .filter(|e| e.role == role)
        .map(|e| e.constraint_delta.trim())
        .filter(|d| !d.is_empty())
        .collect();
    let mut used = base.chars().count();
    let mut kept = Vec::new();
    for delta in deltas.iter().rev() {
        let cost = delta.chars().count() + usize::from(used > 0);
        if used + cost > budget {
            break;
        }
        used += cost;
        kept.push(*delta);
    }
    kept.reverse();
    let mut out = base.to_string();
    for delta in kept {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(delta);
    }
    out
}

/// Rewrites only `role.constraints`.
pub fn apply_experience(role: &mut RoleProfile, entries: &[ExperienceEntry], budget: usize) {
    role.constraints = load_constraints(&role.name, &role.constraints, entries, budget);
}
