//! One LLM-backed action per SOP step. Each action validates the response
//! and asks again once with the problem spelled out before giving up.

use crate::document::{
    duplicate_tasks, parse_document, validate_dependencies, Document, DocumentError, DocumentKind,
};
use crate::llm::extract::extract_code_blocks;
use crate::llm::{CompletionRequest, Gateway, LlmError};
use crate::model::{ActionKind, CodeArtifact, ModelError, RoleProfile};

use super::prompts::PromptTemplates;

#[derive(Debug, thiserror::Error)]
pub enum ActionError {
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Schema(#[from] DocumentError),
    #[error("no fenced code block for {file}")]
    NoCodeBlock { file: String },
    #[error(transparent)]
    InvalidArtifact(#[from] ModelError),
}

/// One file to write, with what the plan says belongs in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTask {
    pub file: String,
    pub logic: Option<String>,
}

/// A role's handle for running actions.
pub struct Actor<'a> {
    pub role: &'a RoleProfile,
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptTemplates,
    pub language: &'a str,
    pub temperature: f64,
}

impl Actor<'_> {
    fn request(&self, action: ActionKind, user_prompt: String) -> CompletionRequest {
        let mut req = CompletionRequest::new(
            self.role.name.clone(),
            action,
            self.prompts.system_prompt(self.role),
            user_prompt,
        );
        req.temperature = self.temperature;
        req
    }

    /// Sends the prompt, and if `parse` rejects the answer, sends it once more
    /// with the rejection appended.
    fn ask<T>(
        &self,
        action: ActionKind,
        user_prompt: String,
        parse: impl Fn(&str) -> Result<T, ActionError>,
    ) -> Result<T, ActionError> {
        let first = self.gateway.complete(&self.request(action, user_prompt.clone()))?;
        let problem = match parse(&first.text) {
            Ok(v) => return Ok(v),
            Err(ActionError::Backend(e)) => return Err(ActionError::Backend(e)),
            Err(e) => e,
        };
        log::info!("{} {action}: re-asking after {problem}", self.role.name);
        let retry = format!(
            "{user_prompt}\n\n## Previous answer rejected\n{problem}\nAnswer again and follow the required format exactly."
        );
        let second = self.gateway.complete(&self.request(action, retry))?;
        parse(&second.text)
    }

    fn ask_document(
        &self,
        action: ActionKind,
        kind: DocumentKind,
        user_prompt: String,
        extra_check: impl Fn(&Document) -> Vec<String>,
    ) -> Result<Document, ActionError> {
        self.ask(action, user_prompt, |text| {
            let doc = parse_document(kind, text)?;
            let problems = extra_check(&doc);
            if problems.is_empty() {
                Ok(doc)
            } else {
                Err(DocumentError::SchemaViolation {
                    kind,
                    missing: Vec::new(),
                    problems,
                }
                .into())
            }
        })
    }

    fn ask_code(
        &self,
        action: ActionKind,
        file: &str,
        user_prompt: String,
    ) -> Result<CodeArtifact, ActionError> {
        self.ask(action, user_prompt, |text| {
            let block = extract_code_blocks(text)
                .into_iter()
                .find(|b| !b.code.trim().is_empty())
                .ok_or_else(|| ActionError::NoCodeBlock {
                    file: file.to_string(),
                })?;
            Ok(CodeArtifact::draft(file, block.code, self.language)?)
        })
    }

    pub fn write_prd(&self, idea: &str) -> Result<Document, ActionError> {
        let prompt = self.prompts.user_prompt(ActionKind::WritePrd, &[("idea", idea)]);
        self.ask_document(ActionKind::WritePrd, DocumentKind::Prd, prompt, |_| Vec::new())
    }

    /// `requirements` is the rendered PRD, or the raw idea when no PRD exists.
    pub fn write_design(&self, requirements: &str) -> Result<Document, ActionError> {
        let prompt = self.prompts.user_prompt(
            ActionKind::WriteDesign,
            &[("requirements", requirements), ("language", self.language)],
        );
        self.ask_document(ActionKind::WriteDesign, DocumentKind::SystemDesign, prompt, |_| {
            Vec::new()
        })
    }

    /// Returns the plan and any non-fatal dependency warnings.
    pub fn write_tasks(
        &self,
        design_text: &str,
        design: Option<&Document>,
    ) -> Result<(Document, Vec<String>), ActionError> {
        let prompt = self.prompts.user_prompt(
            ActionKind::WriteTasks,
            &[("design", design_text), ("language", self.language)],
        );
        let plan = self.ask_document(
            ActionKind::WriteTasks,
            DocumentKind::TaskPlan,
            prompt,
            duplicate_tasks,
        )?;
        let warnings = design
            .map(|d| validate_dependencies(&plan, d).warnings)
            .unwrap_or_default();
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok((plan, warnings))
    }

    pub fn write_code(&self, task: &CodeTask, context: &str) -> Result<CodeArtifact, ActionError> {
        let logic = task
            .logic
            .as_deref()
            .map(|l| format!("It should contain: {l}"))
            .unwrap_or_default();
        let prompt = self.prompts.user_prompt(
            ActionKind::WriteCode,
            &[
                ("context", context),
                ("file", &task.file),
                ("language", self.language),
                ("logic", &logic),
            ],
        );
        self.ask_code(ActionKind::WriteCode, &task.file, prompt)
    }

    pub fn write_tests(&self, code: &CodeArtifact, context: &str) -> Result<CodeArtifact, ActionError> {
        let test_file = test_file_for(&code.file_name);
        let prompt = self.prompts.user_prompt(
            ActionKind::WriteTests,
            &[
                ("code", code.code.trim_end()),
                ("context", context),
                ("file", &code.file_name),
                ("test_file", &test_file),
                ("language", &code.language_tag),
            ],
        );
        self.ask_code(ActionKind::WriteTests, &test_file, prompt)
    }
}

/// `pkg/rgb.py` is tested by `test_rgb.py`.
pub fn test_file_for(module: &str) -> String {
    let base = module.rsplit('/').next().unwrap_or(module);
    format!("test_{base}")
}

/// Whether a file name looks like a test module rather than product code.
pub fn is_test_file(name: &str) -> bool {
    let base = name.rsplit('/').next().unwrap_or(name);
    base.starts_with("test_")
        || base.starts_with("tests.")
        || base.starts_with("test.")
        || base.split('.').next().is_some_and(|stem| stem.ends_with("_test"))
}
