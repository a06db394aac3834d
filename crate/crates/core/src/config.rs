//! TOML settings file covering the backend, pricing, sandbox, pipeline,
//! experience store, evaluation and prompt overrides. Every field has a
//! default, so an empty file is valid.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::experience::{ExperienceStore, CONSTRAINT_BUDGET};
use crate::llm::Rates;
use crate::sandbox::{ExecLimits, SandboxConfig};
use crate::sop::{PipelineConfig, PromptTemplates, RoleKind, UnknownRole};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    UnknownRole(#[from] UnknownRole),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub base_url: String,
    pub model: String,
}

impl Default for BackendSettings {
    fn default() -> Self {
        BackendSettings {
            base_url: "https://api.openai.com".into(),
            model: "gpt-4o-mini".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxSettings {
    pub interpreter: String,
    pub harness: Option<PathBuf>,
    pub run_template: String,
    pub shim_template: String,
    pub env_allowlist: Vec<String>,
    pub max_concurrent: usize,
    pub timeout_secs: f64,
    pub max_output_bytes: usize,
}

impl Default for SandboxSettings {
    fn default() -> Self {
        let sb = SandboxConfig::default();
        let limits = ExecLimits::default();
        SandboxSettings {
            interpreter: sb.interpreter,
            harness: sb.harness,
            run_template: sb.run_template,
            shim_template: sb.shim_template,
            env_allowlist: sb.env_allowlist,
            max_concurrent: sb.max_concurrent,
            timeout_secs: limits.timeout.as_secs_f64(),
            max_output_bytes: limits.max_output_bytes,
        }
    }
}

impl SandboxSettings {
    pub fn sandbox_config(&self) -> SandboxConfig {
        SandboxConfig {
            interpreter: self.interpreter.clone(),
            harness: self.harness.clone(),
            run_template: self.run_template.clone(),
            shim_template: self.shim_template.clone(),
            env_allowlist: self.env_allowlist.clone(),
            max_concurrent: self.max_concurrent,
        }
    }

    pub fn limits(&self) -> ExecLimits {
        ExecLimits {
            timeout: Duration::try_from_secs_f64(self.timeout_secs).unwrap_or(Duration::ZERO),
            max_output_bytes: self.max_output_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    /// Role slugs; all five when absent.
    pub roles: Option<Vec<String>>,
    pub max_rounds: usize,
    pub feedback: bool,
    pub language: String,
    pub entry_file: String,
    pub temperature: f64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            roles: None,
            max_rounds: PipelineConfig::DEFAULT_MAX_ROUNDS,
            feedback: true,
            language: "python".into(),
            entry_file: "main.py".into(),
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperienceSettings {
    /// Load stored constraints into roles before a run.
    pub load: bool,
    /// Ask every role for a handover summary after a run.
    pub handover: bool,
    /// Store file; the user data directory when absent.
    pub store: Option<PathBuf>,
    pub budget: usize,
}

impl Default for ExperienceSettings {
    fn default() -> Self {
        ExperienceSettings {
            load: false,
            handover: false,
            store: None,
            budget: CONSTRAINT_BUDGET,
        }
    }
}

impl ExperienceSettings {
    pub fn open_store(&self) -> Option<ExperienceStore> {
        self.store
            .clone()
            .or_else(ExperienceStore::default_path)
            .map(ExperienceStore::open)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Source extensions counted by `stats`.
    pub extensions: Vec<String>,
    pub timeout_secs: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            extensions: crate::eval::SOURCE_EXTENSIONS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            timeout_secs: 10.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub backend: BackendSettings,
    pub rates: Option<Rates>,
    pub sandbox: SandboxSettings,
    pub pipeline: PipelineSettings,
    pub experience: ExperienceSettings,
    pub eval: EvalSettings,
    /// Prompt templates keyed by action token (`write_prd`, ...) or `system`.
    pub prompts: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn role_kinds(&self) -> Result<Vec<RoleKind>, ConfigError> {
        match &self.pipeline.roles {
            None => Ok(RoleKind::ALL.to_vec()),
            Some(slugs) => Ok(slugs
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<RoleKind>, _>>()?),
        }
    }

    pub fn prompt_templates(&self) -> PromptTemplates {
        self.prompts
            .iter()
            .fold(PromptTemplates::default(), |p, (k, v)| p.with_override(k, v))
    }

    /// Pipeline for `kinds` with every other setting taken from this file.
    pub fn pipeline(&self, kinds: &[RoleKind]) -> PipelineConfig {
        let p = &self.pipeline;
        PipelineConfig {
            max_rounds: p.max_rounds,
            feedback: p.feedback,
            language: p.language.clone(),
            entry_file: p.entry_file.clone(),
            temperature: p.temperature,
            limits: self.sandbox.limits(),
            prompts: self.prompt_templates(),
            ..PipelineConfig::with_roles(kinds)
        }
    }
}
