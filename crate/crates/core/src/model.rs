//! Shared domain types: roles, action kinds, messages and code artifacts.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Component, Path};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::document::{Document, DocumentKind};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("role {0:?} is invalid: {1}")]
    InvalidRole(String, &'static str),
    #[error("invalid file name {0:?}: {1}")]
    InvalidFileName(String, &'static str),
    #[error("unknown action kind {0:?}")]
    UnknownAction(String),
}

/// The closed set of actions a message can be caused by.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    UserRequirement,
    WritePrd,
    WriteDesign,
    WriteTasks,
    WriteCode,
    WriteTests,
    RunTests,
    DebugCode,
    HandoverFeedback,
}

impl ActionKind {
    pub const ALL: [ActionKind; 9] = [
        ActionKind::UserRequirement,
        ActionKind::WritePrd,
        ActionKind::WriteDesign,
        ActionKind::WriteTasks,
        ActionKind::WriteCode,
        ActionKind::WriteTests,
        ActionKind::RunTests,
        ActionKind::DebugCode,
        ActionKind::HandoverFeedback,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::UserRequirement => "user_requirement",
            ActionKind::WritePrd => "write_prd",
            ActionKind::WriteDesign => "write_design",
            ActionKind::WriteTasks => "write_tasks",
            ActionKind::WriteCode => "write_code",
            ActionKind::WriteTests => "write_tests",
            ActionKind::RunTests => "run_tests",
            ActionKind::DebugCode => "debug_code",
            ActionKind::HandoverFeedback => "handover_feedback",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownAction(s.to_string()))
    }
}

/// Identity of an agent: who it is, what it aims for, and what it listens to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleProfile {
    pub name: String,
    /// Role title, e.g. "Architect".
    pub profile: String,
    pub goal: String,
    pub constraints: String,
    /// Subscription interest: messages caused by these actions are delivered.
    pub watched_actions: BTreeSet<ActionKind>,
    #[serde(default)]
    pub skills: BTreeSet<String>,
}

impl RoleProfile {
    pub fn new(
        name: impl Into<String>,
        profile: impl Into<String>,
        goal: impl Into<String>,
        constraints: impl Into<String>,
        watched_actions: impl IntoIterator<Item = ActionKind>,
    ) -> Result<Self, ModelError> {
        let role = RoleProfile {
            name: name.into(),
            profile: profile.into(),
            goal: goal.into(),
            constraints: constraints.into(),
            watched_actions: watched_actions.into_iter().collect(),
            skills: BTreeSet::new(),
        };
        role.validate()?;
        Ok(role)
    }

    pub fn with_skills<I, S>(mut self, skills: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.skills = skills.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.trim().is_empty() {
            return Err(ModelError::InvalidRole(self.name.clone(), "empty name"));
        }
        if self.profile.trim().is_empty() {
            return Err(ModelError::InvalidRole(self.name.clone(), "empty profile"));
        }
        if self.watched_actions.is_empty() {
            return Err(ModelError::InvalidRole(
                self.name.clone(),
                "watched_actions is empty",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeStatus {
    Draft,
    TestedPass,
    TestedFail,
}

/// One generated source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeArtifact {
    pub file_name: String,
    pub code: String,
    pub language_tag: String,
    pub revision: u32,
    pub status: CodeStatus,
}

impl CodeArtifact {
    /// A fresh draft at revision 0.
    pub fn draft(
        file_name: impl Into<String>,
        code: impl Into<String>,
        language_tag: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let file_name = file_name.into();
        check_relative_path(&file_name)?;
        Ok(CodeArtifact {
            file_name,
            code: code.into(),
            language_tag: language_tag.into(),
            revision: 0,
            status: CodeStatus::Draft,
        })
    }

    /// The next revision of this file, produced by one debug cycle.
    pub fn revise(&self, code: impl Into<String>) -> CodeArtifact {
        CodeArtifact {
            file_name: self.file_name.clone(),
            code: code.into(),
            language_tag: self.language_tag.clone(),
            revision: self.revision + 1,
            status: CodeStatus::Draft,
        }
    }

    /// File name without any directory part.
    pub fn base_name(&self) -> &str {
        self.file_name.rsplit('/').next().unwrap_or(&self.file_name)
    }
}

/// Rejects absolute paths and `..` components.
pub fn check_relative_path(name: &str) -> Result<(), ModelError> {
    if name.trim().is_empty() {
        return Err(ModelError::InvalidFileName(name.into(), "empty"));
    }
    let path = Path::new(name);
    for component in path.components() {
        match component {
            Component::Normal(_) | Component::CurDir => {}
            Component::ParentDir => {
                return Err(ModelError::InvalidFileName(
                    name.into(),
                    "parent-directory traversal",
                ))
            }
            Component::RootDir | Component::Prefix(_) => {
                return Err(ModelError::InvalidFileName(name.into(), "absolute path"))
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestCounts {
    pub passed: u32,
    pub failed: u32,
    pub errored: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOutcome {
    Passed,
    Failed,
}

/// Outcome of running one module's tests through the feedback loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub module: String,
    pub test_file: String,
    pub outcome: TestOutcome,
    pub executions: usize,
    pub retries_used: u32,
    pub final_revision: u32,
    pub exit_code: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_counts: Option<TestCounts>,
    /// Tail of the last stderr, present only when the tests never passed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_excerpt: Option<String>,
}

/// What a message carries.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageContent {
    Text(String),
    Document(Document),
    Code(CodeArtifact),
    TestReport(TestReport),
}

impl MessageContent {
    pub fn is_empty(&self) -> bool {
        match self {
            MessageContent::Text(t) => t.trim().is_empty(),
            MessageContent::Document(d) => d.sections.is_empty(),
            MessageContent::Code(c) => c.code.trim().is_empty(),
            MessageContent::TestReport(_) => false,
        }
    }

    /// Stable token used in the persisted message log.
    pub fn kind_token(&self) -> &'static str {
        match self {
            MessageContent::Text(_) => "text",
            MessageContent::Document(d) => d.kind.as_str(),
            MessageContent::Code(_) => DocumentKind::CodeArtifact.as_str(),
            MessageContent::TestReport(_) => DocumentKind::TestReport.as_str(),
        }
    }

    pub fn as_document(&self) -> Option<&Document> {
        match self {
            MessageContent::Document(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_code(&self) -> Option<&CodeArtifact> {
        match self {
            MessageContent::Code(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            MessageContent::Text(t) => Some(t),
            _ => None,
        }
    }
}

/// A message before the pool has assigned its sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageDraft {
    pub sent_from: String,
    pub cause_by: ActionKind,
    pub content: MessageContent,
    /// Explicit addressees; empty means broadcast.
    pub send_to: BTreeSet<String>,
}

impl MessageDraft {
    pub fn broadcast(
        sent_from: impl Into<String>,
        cause_by: ActionKind,
        content: MessageContent,
    ) -> Self {
        MessageDraft {
            sent_from: sent_from.into(),
            cause_by,
            content,
            send_to: BTreeSet::new(),
        }
    }

    pub fn to(mut self, addressee: impl Into<String>) -> Self {
        self.send_to.insert(addressee.into());
        self
    }
}

/// One published pool entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub seq: u64,
    pub sent_from: String,
    pub cause_by: ActionKind,
    pub content: MessageContent,
    pub send_to: BTreeSet<String>,
    pub timestamp: DateTime<Utc>,
}

impl Message {
    pub fn is_addressed_to(&self, role_name: &str) -> bool {
        self.send_to.contains(role_name)
    }
}
