//! Completion providers and token accounting.
//!
//! A [`Gateway`] wraps one [`CompletionBackend`] and records every successful
//! call in a [`CostLedger`]. Two backends ship: [`ChatClient`] speaks the
//! chat-completions wire format, [`Playbook`] replays canned responses.

mod client;
pub mod extract;
mod ledger;
mod playbook;

use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::ActionKind;

pub use client::ChatClient;
pub use extract::{extract_code_blocks, extract_sections, CodeBlock, Sections};
pub use ledger::{CostLedger, LedgerEntry, LedgerTotals, Rates};
pub use playbook::{Playbook, PlaybookEntry};

pub const API_KEY_ENV: &str = "SOPFORGE_API_KEY";

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("playbook has no remaining entry for ({role}, {action})")]
    PlaybookExhausted { role: String, action: ActionKind },
    #[error("playbook line {line}: {reason}")]
    PlaybookFormat { line: usize, reason: String },
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("price rates are not set")]
    RatesUnset,
}

/// Who is asking, for playbook matching and ledger attribution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestTag {
    pub role: String,
    pub action: ActionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub tag: RequestTag,
}

impl CompletionRequest {
    pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 4096;

    /// Temperature 0 and the default output budget.
    pub fn new(
        role: impl Into<String>,
        action: ActionKind,
        system_prompt: impl Into<String>,
        user_prompt: impl Into<String>,
    ) -> Self {
        CompletionRequest {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature: 0.0,
            max_output_tokens: Self::DEFAULT_MAX_OUTPUT_TOKENS,
            tag: RequestTag {
                role: role.into(),
                action,
            },
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.system_prompt.trim().is_empty() || self.user_prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompts must be non-empty".into()));
        }
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: TokenUsage,
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError>;
}

/// Whitespace-delimited word count; stands in for a tokenizer offline.
pub fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    ledger: Mutex<CostLedger>,
}

impl Gateway {
    pub fn new(backend: impl CompletionBackend + 'static) -> Self {
        Gateway {
            backend: Box::new(backend),
            ledger: Mutex::new(CostLedger::default()),
        }
    }

    pub fn with_rates(self, rates: Rates) -> Self {
        self.ledger_mut().rates = Some(rates);
        self
    }

    fn ledger_mut(&self) -> std::sync::MutexGuard<'_, CostLedger> {
        self.ledger.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        let started = Instant::now();
        let completion = self.backend.complete(req)?;
        let seconds = started.elapsed().as_secs_f64();
        self.ledger_mut().record(LedgerEntry {
            role: req.tag.role.clone(),
            action: req.tag.action,
            prompt_tokens: completion.usage.prompt_tokens,
            completion_tokens: completion.usage.completion_tokens,
            seconds,
        });
        Ok(completion)
    }

    pub fn ledger(&self) -> CostLedger {
        self.ledger_mut().clone()
    }
}
