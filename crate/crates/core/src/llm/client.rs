//! Chat-completions wire client.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Completion, CompletionBackend, CompletionRequest, LlmError, TokenUsage, API_KEY_ENV};

pub struct ChatClient {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatClient {
    pub fn new(base_url: &str, model: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(600)))
            .build()
            .into();
        ChatClient {
            agent,
            endpoint: format!("{}/v1/chat/completions", base_url.trim_end_matches('/')),
            model: model.into(),
            api_key,
        }
    }

    /// Reads the API key from `SOPFORGE_API_KEY`. A missing key is allowed for
    /// local endpoints that do not check one.
    pub fn from_env(base_url: &str, model: impl Into<String>) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        if key.is_none() {
            log::warn!("{API_KEY_ENV} is not set; sending requests without authorization");
        }
        Self::new(base_url, model, key)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl CompletionBackend for ChatClient {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        });
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Provider { status, body: text });
        }
        let parsed: WireResponse = serde_json::from_str(&text).map_err(|e| LlmError::Provider {
            status,
            body: format!("unparseable response ({e}): {text}"),
        })?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Provider {
                status,
                body: "response has no choices[0].message.content".into(),
            })?;
        let usage = parsed.usage.map_or_else(TokenUsage::default, |u| TokenUsage {
            prompt_tokens: u.prompt_tokens,
            completion_tokens: u.completion_tokens,
        });
        Ok(Completion {
            text: content,
            usage,
        })
    }
}
