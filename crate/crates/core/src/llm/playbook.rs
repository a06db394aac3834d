//! Deterministic scripted backend.
//!
//! A playbook is an ordered list of canned responses, each optionally bound
//! to a role and/or action. A request takes the first unused entry whose
//! binding matches its tag; every entry is used at most once.

use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{whitespace_tokens, Completion, CompletionBackend, CompletionRequest, LlmError, TokenUsage};
use crate::model::ActionKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybookEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionKind>,
    pub response: String,
}

impl PlaybookEntry {
    pub fn new(role: impl Into<String>, action: ActionKind, response: impl Into<String>) -> Self {
        PlaybookEntry {
            role: Some(role.into()),
            action: Some(action),
            response: response.into(),
        }
    }

    /// Matches any request.
    pub fn any(response: impl Into<String>) -> Self {
        PlaybookEntry {
            role: None,
            action: None,
            response: response.into(),
        }
    }

    fn matches(&self, req: &CompletionRequest) -> bool {
        self.role.as_deref().is_none_or(|r| r == req.tag.role)
            && self.action.is_none_or(|a| a == req.tag.action)
    }
}

#[derive(Debug)]
pub struct Playbook {
    entries: Vec<PlaybookEntry>,
    used: Mutex<Vec<bool>>,
}

impl Playbook {
    pub fn from_entries(entries: Vec<PlaybookEntry>) -> Self {
        let used = Mutex::new(vec![false; entries.len()]);
        Playbook { entries, used }
    }

    /// One JSON entry per line; blank lines are ignored.
    pub fn parse_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(line).map_err(|e| LlmError::PlaybookFormat {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = fs::read_to_string(path).map_err(|e| LlmError::PlaybookFormat {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::parse_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
            .collect()
    }

    pub fn remaining(&self) -> usize {
        self.used
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .filter(|u| !**u)
            .count()
    }
}

impl CompletionBackend for Playbook {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        let idx = self
            .entries
            .iter()
            .enumerate()
            .position(|(i, e)| !used[i] && e.matches(req))
            .ok_or_else(|| LlmError::PlaybookExhausted {
                role: req.tag.role.clone(),
                action: req.tag.action,
            })?;
        used[idx] = true;
        let text = self.entries[idx].response.clone();
        let usage = TokenUsage {
            prompt_tokens: whitespace_tokens(&req.system_prompt) + whitespace_tokens(&req.user_prompt),
            completion_tokens: whitespace_tokens(&text),
        };
        Ok(Completion { text, usage })
    }
}
