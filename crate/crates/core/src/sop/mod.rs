//! The SOP engine: roles take turns reading the pool and publishing the next
//! artifact until nobody has anything left to do.

pub mod actions;
pub mod prompts;
pub mod roles;
mod workspace;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::document::{render_document, Document, DocumentKind};
use crate::feedback::{feedback_loop, feedback_root, AttemptRecorder, FeedbackContext, FeedbackError};
use crate::llm::CostLedger;
use crate::llm::Gateway;
use crate::model::{
    check_relative_path, ActionKind, CodeArtifact, CodeStatus, Message, MessageContent,
    MessageDraft, TestOutcome, TestReport,
};
use crate::pool::{MessagePool, PoolError, SubscriptionId};
use crate::sandbox::{ExecLimits, Sandbox};

pub use actions::{is_test_file, test_file_for, ActionError, Actor, CodeTask};
pub use prompts::PromptTemplates;
pub use roles::{chain, RoleKind, RoleSpec, UnknownRole};
pub use workspace::write_workspace;

/// Name the initial requirement is published under.
pub const USER: &str = "User";

#[derive(Debug, thiserror::Error)]
pub enum SopError {
    #[error("the idea is empty")]
    IdeaEmpty,
    #[error("invalid pipeline: {0}")]
    InvalidConfig(String),
    #[error("stopped after {} rounds with work still pending", .0.rounds)]
    RoundLimitExceeded(Box<ProjectResult>),
    #[error("{role} failed at {action}: {source}")]
    Action {
        role: String,
        action: ActionKind,
        source: ActionError,
    },
    #[error("{role} could not finish the test-and-repair loop: {source}")]
    Feedback { role: String, source: FeedbackError },
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("writing the workspace: {0}")]
    Io(#[from] std::io::Error),
}

impl SopError {
    /// True when the model endpoint itself failed, as opposed to a bad answer.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            SopError::Action {
                source: ActionError::Backend(_),
                ..
            } | SopError::Feedback {
                source: FeedbackError::Backend { .. },
                ..
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub roles: Vec<RoleSpec>,
    /// Upper bound on scheduling rounds; one round gives every role a turn.
    pub max_rounds: usize,
    /// Where documents, code, logs and the ledger are written. `None` keeps
    /// everything in memory.
    pub workspace: Option<PathBuf>,
    /// Run QA's tests against the code and repair it on failure.
    pub feedback: bool,
    pub limits: ExecLimits,
    pub prompts: PromptTemplates,
    pub language: String,
    /// File written when there is no design or plan to name files.
    pub entry_file: String,
    pub temperature: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::with_roles(&RoleKind::ALL)
    }
}

impl PipelineConfig {
    pub const DEFAULT_MAX_ROUNDS: usize = 64;

    pub fn with_roles(kinds: &[RoleKind]) -> Self {
        PipelineConfig {
            roles: chain(kinds),
            max_rounds: Self::DEFAULT_MAX_ROUNDS,
            workspace: None,
            feedback: true,
            limits: ExecLimits::default(),
            prompts: PromptTemplates::default(),
            language: "python".into(),
            entry_file: "main.py".into(),
            temperature: 0.0,
        }
    }

    pub fn workspace(mut self, dir: impl Into<PathBuf>) -> Self {
        self.workspace = Some(dir.into());
        self
    }

    pub fn role(&self, name: &str) -> Option<&RoleSpec> {
        self.roles.iter().find(|r| r.profile.name == name)
    }

    pub fn role_mut(&mut self, name: &str) -> Option<&mut RoleSpec> {
        self.roles.iter_mut().find(|r| r.profile.name == name)
    }

    /// QA when present, else the Engineer.
    pub fn terminal_role(&self) -> Option<&RoleSpec> {
        self.roles
            .iter()
            .find(|r| r.kind == RoleKind::QaEngineer)
            .or_else(|| self.roles.iter().find(|r| r.kind == RoleKind::Engineer))
    }

    pub fn validate(&self) -> Result<(), SopError> {
        let bad = |m: String| Err(SopError::InvalidConfig(m));
        if self.roles.is_empty() {
            return bad("no roles".into());
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be positive".into());
        }
        if let Err(e) = self.limits.validate() {
            return bad(e);
        }
        if self.language.trim().is_empty() {
            return bad("language is empty".into());
        }
        if let Err(e) = check_relative_path(&self.entry_file) {
            return bad(e.to_string());
        }
        let mut names = BTreeSet::new();
        let mut producers: IndexMap<ActionKind, usize> = IndexMap::new();
        for (i, role) in self.roles.iter().enumerate() {
            if let Err(e) = role.profile.validate() {
                return bad(e.to_string());
            }
            if !names.insert(role.profile.name.as_str()) {
                return bad(format!("duplicate role name {:?}", role.profile.name));
            }
            for &action in &role.produces {
                if action == ActionKind::UserRequirement {
                    return bad(format!("{} cannot produce the user requirement", role.profile.name));
                }
                if let Some(&other) = producers.get(&action) {
                    return bad(format!(
                        "{action} is produced by both {} and {}",
                        self.roles[other].profile.name, role.profile.name
                    ));
                }
                producers.insert(action, i);
            }
        }
        if self.terminal_role().is_none() {
            return bad("an Engineer is required".into());
        }
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); self.roles.len()];
        for (i, role) in self.roles.iter().enumerate() {
            for action in &role.prerequisites {
                if *action == ActionKind::UserRequirement {
                    continue;
                }
                match producers.get(action) {
                    Some(&j) => edges[i].push(j),
                    None => {
                        return bad(format!(
                            "{} needs {action}, which no role produces",
                            role.profile.name
                        ))
                    }
                }
            }
        }
        if let Some(i) = find_cycle(&edges) {
            return bad(format!(
                "prerequisites of {} form a cycle",
                self.roles[i].profile.name
            ));
        }
        Ok(())
    }
}

/// Index of a node on a cycle, if any.
fn find_cycle(edges: &[Vec<usize>]) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(n: usize, edges: &[Vec<usize>], marks: &mut [Mark]) -> Option<usize> {
        marks[n] = Mark::Active;
        for &m in &edges[n] {
            match marks[m] {
                Mark::Active => return Some(m),
                Mark::New => {
                    if let Some(c) = visit(m, edges, marks) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        marks[n] = Mark::Done;
        None
    }
    let mut marks = vec![Mark::New; edges.len()];
    (0..edges.len()).find_map(|n| {
        if marks[n] == Mark::New {
            visit(n, edges, &mut marks)
        } else {
            None
        }
    })
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct ProjectResult {
    pub idea: String,
    /// Latest PRD, design and plan, in that order, when produced.
    pub documents: Vec<Document>,
    /// Latest revision of each source file, in first-written order.
    pub code_files: Vec<CodeArtifact>,
    pub test_files: Vec<CodeArtifact>,
    pub test_reports: Vec<TestReport>,
    pub messages: Vec<Arc<Message>>,
    /// Sequence numbers each role consumed, keyed by role name.
    pub memories: IndexMap<String, Vec<u64>>,
    pub ledger: CostLedger,
    pub warnings: Vec<String>,
    pub rounds: usize,
    /// The terminal role published at least once.
    pub completed: bool,
}

impl ProjectResult {
    pub fn document(&self, kind: DocumentKind) -> Option<&Document> {
        self.documents.iter().find(|d| d.kind == kind)
    }

    pub fn code_file(&self, name: &str) -> Option<&CodeArtifact> {
        self.code_files.iter().find(|c| c.file_name == name)
    }

    /// Messages a role consumed, in the order it saw them.
    pub fn transcript(&self, role: &str) -> Vec<&Message> {
        self.memories
            .get(role)
            .map(|seqs| {
                seqs.iter()
                    .filter_map(|&s| self.messages.get(s as usize).map(|m| &**m))
                    .collect()
            })
            .unwrap_or_default()
    }
}

struct Agent {
    sub: SubscriptionId,
    memory: Vec<Arc<Message>>,
    /// Messages this role published itself.
    outputs: Vec<Arc<Message>>,
}

/// A pool plus the roles reading from it. Use [`run`] for the whole pipeline
/// or [`Engine::step`] to drive roles by hand.
pub struct Engine<'a> {
    config: &'a PipelineConfig,
    gateway: &'a Gateway,
    sandbox: &'a Sandbox,
    pool: MessagePool,
    agents: Vec<Agent>,
    warnings: Vec<String>,
    idea: String,
    rounds: usize,
}

impl<'a> Engine<'a> {
    pub fn new(
        config: &'a PipelineConfig,
        gateway: &'a Gateway,
        sandbox: &'a Sandbox,
    ) -> Result<Self, SopError> {
        config.validate()?;
        let pool = MessagePool::new();
        let agents = config
            .roles
            .iter()
            .map(|r| Agent {
                sub: pool.subscribe(&r.profile),
                memory: Vec::new(),
                outputs: Vec::new(),
            })
            .collect();
        Ok(Engine {
            config,
            gateway,
            sandbox,
            pool,
            agents,
            warnings: Vec::new(),
            idea: String::new(),
            rounds: 0,
        })
    }

    pub fn pool(&self) -> &MessagePool {
        &self.pool
    }

    /// Publishes on behalf of someone outside the pipeline, e.g. the user.
    pub fn publish(&mut self, draft: MessageDraft) -> Result<u64, SopError> {
        if draft.cause_by == ActionKind::UserRequirement {
            if let Some(idea) = draft.content.as_text() {
                self.idea = idea.to_string();
            }
        }
        Ok(self.pool.publish(draft)?)
    }

    /// One observe-think-act turn for the named role. Returns what it
    /// published, which is empty when it was not ready or had nothing new.
    pub fn step(&mut self, role: &str) -> Result<Vec<Arc<Message>>, SopError> {
        let i = self
            .config
            .roles
            .iter()
            .position(|r| r.profile.name == role)
            .ok_or_else(|| SopError::InvalidConfig(format!("no role named {role:?}")))?;
        self.step_at(i)
    }

    fn wants_turn(&self, i: usize) -> Result<bool, SopError> {
        Ok(self.pool.ready(&self.config.roles[i].prerequisites)
            && self.pool.has_pending(self.agents[i].sub)?)
    }

    fn step_at(&mut self, i: usize) -> Result<Vec<Arc<Message>>, SopError> {
        let spec = &self.config.roles[i];
        if !self.pool.ready(&spec.prerequisites) {
            return Ok(Vec::new());
        }
        let batch = self.pool.fetch_new(self.agents[i].sub)?;
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        self.agents[i].memory.extend(batch.iter().cloned());
        let before = self.agents[i].outputs.len();
        match spec.kind {
            RoleKind::ProductManager | RoleKind::Architect | RoleKind::ProjectManager => {
                self.act_document(i, &batch)?
            }
            RoleKind::Engineer => self.act_engineer(i, &batch)?,
            RoleKind::QaEngineer => self.act_qa(i, &batch)?,
        }
        Ok(self.agents[i].outputs[before..].to_vec())
    }

    fn actor(&self, i: usize) -> Actor<'a> {
        let config = self.config;
        Actor {
            role: &config.roles[i].profile,
            gateway: self.gateway,
            prompts: &config.prompts,
            language: &config.language,
            temperature: config.temperature,
        }
    }

    fn emit(&mut self, i: usize, draft: MessageDraft) -> Result<(), SopError> {
        let seq = self.pool.publish(draft)?;
        let msg = self.pool.get(seq).expect("just published");
        self.agents[i].outputs.push(msg);
        Ok(())
    }

    fn fail(&self, i: usize, action: ActionKind) -> impl Fn(ActionError) -> SopError + '_ {
        let role = self.config.roles[i].profile.name.clone();
        move |source| SopError::Action {
            role: role.clone(),
            action,
            source,
        }
    }

    fn act_document(&mut self, i: usize, batch: &[Arc<Message>]) -> Result<(), SopError> {
        let config = self.config;
        let spec = &config.roles[i];
        let Some(input) = batch
            .iter()
            .rev()
            .find(|m| spec.prerequisites.contains(&m.cause_by))
        else {
            return Ok(());
        };
        let text = content_text(&input.content);
        let actor = self.actor(i);
        let (action, doc) = match spec.kind {
            RoleKind::ProductManager => {
                let a = ActionKind::WritePrd;
                (a, actor.write_prd(&text).map_err(self.fail(i, a))?)
            }
            RoleKind::Architect => {
                let a = ActionKind::WriteDesign;
                (a, actor.write_design(&text).map_err(self.fail(i, a))?)
            }
            _ => {
                let a = ActionKind::WriteTasks;
                let design = input
                    .content
                    .as_document()
                    .filter(|d| d.kind == DocumentKind::SystemDesign);
                let (plan, warnings) = actor.write_tasks(&text, design).map_err(self.fail(i, a))?;
                self.warnings.extend(warnings);
                (a, plan)
            }
        };
        let from = spec.profile.name.clone();
        self.emit(i, MessageDraft::broadcast(from, action, MessageContent::Document(doc)))
    }

    /// Documents and requirement the role has seen, as prompt context.
    fn briefing(&self, i: usize) -> String {
        let memory = &self.agents[i].memory;
        let mut parts = Vec::new();
        if let Some(idea) = memory
            .iter()
            .rev()
            .find(|m| m.cause_by == ActionKind::UserRequirement)
            .and_then(|m| m.content.as_text())
        {
            parts.push(format!("# Requirement\n{idea}"));
        }
        for (kind, title) in [
            (DocumentKind::Prd, "Product requirements"),
            (DocumentKind::SystemDesign, "System design"),
            (DocumentKind::TaskPlan, "Tasks"),
        ] {
            if let Some(doc) = latest_document(memory, kind) {
                parts.push(format!("# {title}\n{}", render_or_source(doc)));
            }
        }
        parts.join("\n\n")
    }

    fn code_tasks(&self, content: &MessageContent) -> Vec<CodeTask> {
        let mut tasks: Vec<CodeTask> = match content.as_document() {
            Some(plan) if plan.kind == DocumentKind::TaskPlan => plan
                .task_list()
                .iter()
                .map(|f| CodeTask {
                    file: f.clone(),
                    logic: plan.logic_for(f).map(str::to_string),
                })
                .collect(),
            Some(design) if design.kind == DocumentKind::SystemDesign => design
                .file_list()
                .iter()
                .map(|f| CodeTask {
                    file: f.clone(),
                    logic: None,
                })
                .collect(),
            _ => Vec::new(),
        };
        tasks.retain(|t| !is_test_file(&t.file));
        if tasks.is_empty() {
            tasks.push(CodeTask {
                file: self.config.entry_file.clone(),
                logic: None,
            });
        }
        tasks
    }

    /// Latest revision of each file this role has published.
    fn own_code(&self, i: usize) -> IndexMap<String, CodeArtifact> {
        let mut files = IndexMap::new();
        for m in &self.agents[i].outputs {
            if let Some(code) = m.content.as_code() {
                files.insert(code.file_name.clone(), code.clone());
            }
        }
        files
    }

    fn act_engineer(&mut self, i: usize, batch: &[Arc<Message>]) -> Result<(), SopError> {
        let config = self.config;
        let spec = &config.roles[i];
        let name = spec.profile.name.clone();

        if let Some(trigger) = batch
            .iter()
            .rev()
            .find(|m| spec.prerequisites.contains(&m.cause_by))
        {
            let briefing = self.briefing(i);
            let actor = self.actor(i);
            for task in self.code_tasks(&trigger.content) {
                let mut context = briefing.clone();
                let written = self.own_code(i);
                if !written.is_empty() {
                    context.push_str("\n\n# Files already written");
                    for code in written.values() {
                        context.push_str(&format!(
                            "\n## {}\n```{}\n{}```",
                            code.file_name, code.language_tag, code.code
                        ));
                    }
                }
                let code = actor
                    .write_code(&task, &context)
                    .map_err(self.fail(i, ActionKind::WriteCode))?;
                self.emit(
                    i,
                    MessageDraft::broadcast(name.clone(), ActionKind::WriteCode, MessageContent::Code(code)),
                )?;
            }
        }

        if !config.feedback {
            return Ok(());
        }
        for msg in batch.iter().filter(|m| m.cause_by == ActionKind::WriteTests) {
            let Some(tests) = msg.content.as_code() else {
                continue;
            };
            self.repair(i, tests.clone())?;
        }
        Ok(())
    }

    fn repair(&mut self, i: usize, tests: CodeArtifact) -> Result<(), SopError> {
        let config = self.config;
        let spec = &config.roles[i];
        let name = spec.profile.name.clone();
        let files = self.own_code(i);
        let target = tests.base_name().strip_prefix("test_").unwrap_or(tests.base_name());
        let Some(module) = files.values().find(|c| c.base_name() == target).cloned() else {
            self.warnings
                .push(format!("{}: no module matches {}", name, tests.file_name));
            return Ok(());
        };
        let memory = &self.agents[i].memory;
        let requirement = latest_document(memory, DocumentKind::Prd)
            .map(render_or_source)
            .unwrap_or_else(|| self.idea.clone());
        let design = latest_document(memory, DocumentKind::SystemDesign)
            .map(render_or_source)
            .unwrap_or_default();
        let ctx = FeedbackContext {
            requirement,
            design,
            support_files: files
                .values()
                .filter(|c| c.file_name != module.file_name)
                .cloned()
                .collect(),
            role: name.clone(),
            system_prompt: config.prompts.system_prompt(&spec.profile),
            temperature: config.temperature,
        };
        let recorder = config
            .workspace
            .as_deref()
            .map(|w| AttemptRecorder::new(feedback_root(w)));
        let state = feedback_loop(
            module.clone(),
            tests,
            &ctx,
            self.gateway,
            self.sandbox,
            &config.limits,
            recorder.as_ref(),
        )
        .map_err(|source| SopError::Feedback {
            role: name.clone(),
            source,
        })?;
        if state.artifact.revision > module.revision {
            self.emit(
                i,
                MessageDraft::broadcast(
                    name.clone(),
                    ActionKind::DebugCode,
                    MessageContent::Code(state.artifact.clone()),
                )
                .to(name.clone()),
            )?;
        }
        self.emit(
            i,
            MessageDraft::broadcast(name, ActionKind::RunTests, MessageContent::TestReport(state.report())),
        )
    }

    fn act_qa(&mut self, i: usize, batch: &[Arc<Message>]) -> Result<(), SopError> {
        let name = self.config.roles[i].profile.name.clone();
        let actor = self.actor(i);
        for msg in batch.iter().filter(|m| m.cause_by == ActionKind::WriteCode) {
            let Some(code) = msg.content.as_code() else {
                continue;
            };
            let tests = actor
                .write_tests(code, "")
                .map_err(self.fail(i, ActionKind::WriteTests))?;
            self.emit(
                i,
                MessageDraft::broadcast(name.clone(), ActionKind::WriteTests, MessageContent::Code(tests)),
            )?;
        }
        Ok(())
    }

    /// Steps every willing role once, in pipeline order. Returns whether any
    /// role took a turn.
    pub fn round(&mut self) -> Result<bool, SopError> {
        let mut progressed = false;
        for i in 0..self.agents.len() {
            if self.wants_turn(i)? {
                self.step_at(i)?;
                progressed = true;
            }
        }
        if progressed {
            self.rounds += 1;
        }
        Ok(progressed)
    }

    fn anyone_pending(&self) -> Result<bool, SopError> {
        for i in 0..self.agents.len() {
            if self.wants_turn(i)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Publishes the idea and schedules rounds until the pool is quiet.
    pub fn run(&mut self, idea: &str) -> Result<ProjectResult, SopError> {
        if idea.trim().is_empty() {
            return Err(SopError::IdeaEmpty);
        }
        self.publish(MessageDraft::broadcast(
            USER,
            ActionKind::UserRequirement,
            MessageContent::Text(idea.to_string()),
        ))?;
        loop {
            if !self.anyone_pending()? {
                break;
            }
            if self.rounds >= self.config.max_rounds {
                let result = self.finish()?;
                return Err(SopError::RoundLimitExceeded(Box::new(result)));
            }
            if let Err(e) = self.round() {
                if let Some(dir) = &self.config.workspace {
                    if let Err(io) = write_workspace(&self.result(), dir) {
                        log::warn!("could not save the partial workspace: {io}");
                    }
                }
                return Err(e);
            }
        }
        self.finish()
    }

    fn finish(&self) -> Result<ProjectResult, SopError> {
        let result = self.result();
        if let Some(dir) = &self.config.workspace {
            write_workspace(&result, dir)?;
        }
        Ok(result)
    }

    /// Snapshot of what has been produced so far.
    pub fn result(&self) -> ProjectResult {
        let messages = self.pool.snapshot();
        let mut documents: IndexMap<DocumentKind, Document> = IndexMap::new();
        let mut code: IndexMap<String, CodeArtifact> = IndexMap::new();
        let mut tests: IndexMap<String, CodeArtifact> = IndexMap::new();
        let mut reports = Vec::new();
        for m in &messages {
            match (&m.cause_by, &m.content) {
                (_, MessageContent::Document(d)) => {
                    documents.insert(d.kind, d.clone());
                }
                (ActionKind::WriteTests, MessageContent::Code(c)) => {
                    tests.insert(c.file_name.clone(), c.clone());
                }
                (_, MessageContent::Code(c)) => {
                    code.insert(c.file_name.clone(), c.clone());
                }
                (_, MessageContent::TestReport(r)) => reports.push(r.clone()),
                _ => {}
            }
        }
        for r in &reports {
            if let Some(c) = code.get_mut(&r.module) {
                c.status = match r.outcome {
                    TestOutcome::Passed => CodeStatus::TestedPass,
                    TestOutcome::Failed => CodeStatus::TestedFail,
                };
            }
        }
        documents.sort_by_key(|k, _| *k);
        let completed = self.config.terminal_role().is_some_and(|t| {
            messages.iter().any(|m| m.sent_from == t.profile.name)
        });
        ProjectResult {
            idea: self.idea.clone(),
            documents: documents.into_values().collect(),
            code_files: code.into_values().collect(),
            test_files: tests.into_values().collect(),
            test_reports: reports,
            memories: self
                .config
                .roles
                .iter()
                .zip(&self.agents)
                .map(|(r, a)| (r.profile.name.clone(), a.memory.iter().map(|m| m.seq).collect()))
                .collect(),
            messages,
            ledger: self.gateway.ledger(),
            warnings: self.warnings.clone(),
            rounds: self.rounds,
            completed,
        }
    }
}

/// Runs the whole pipeline for one idea.
pub fn run(
    config: &PipelineConfig,
    idea: &str,
    gateway: &Gateway,
    sandbox: &Sandbox,
) -> Result<ProjectResult, SopError> {
    if idea.trim().is_empty() {
        return Err(SopError::IdeaEmpty);
    }
    Engine::new(config, gateway, sandbox)?.run(idea)
}

fn latest_document(memory: &[Arc<Message>], kind: DocumentKind) -> Option<&Document> {
    memory
        .iter()
        .rev()
        .filter_map(|m| m.content.as_document())
        .find(|d| d.kind == kind)
}

fn render_or_source(doc: &Document) -> String {
    render_document(doc)
        .ok()
        .or_else(|| doc.source_text.clone())
        .unwrap_or_default()
}

fn content_text(content: &MessageContent) -> String {
    match content {
        MessageContent::Text(t) => t.clone(),
        MessageContent::Document(d) => render_or_source(d),
        MessageContent::Code(c) => c.code.clone(),
        MessageContent::TestReport(r) => serde_json::to_string_pretty(r).unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests;
