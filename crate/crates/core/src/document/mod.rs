//! Structured documents exchanged between roles.
//!
//! A document is an ordered set of `## `-headed sections. Each kind has a
//! schema naming its required sections in canonical order; list-valued
//! sections are written as a bracketed literal inside a fenced block.
//!
//! Parsing canonicalizes: schema sections come first in schema order, then any
//! extra sections in the order they appeared. Rendering always emits that
//! same order, so `parse(render(d))` reproduces `d`.

mod literal;
mod schema;

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::llm::extract::{extract_sections, normalize_body};

pub use literal::{parse_list_literal, render_list_literal, ListLiteral};
pub use schema::{schema_for, SectionSpec, Shape, PRIORITIES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Prd,
    SystemDesign,
    TaskPlan,
    CodeArtifact,
    TestReport,
}

impl DocumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::Prd => "prd",
            DocumentKind::SystemDesign => "system_design",
            DocumentKind::TaskPlan => "task_plan",
            DocumentKind::CodeArtifact => "code_artifact",
            DocumentKind::TestReport => "test_report",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        [
            DocumentKind::Prd,
            DocumentKind::SystemDesign,
            DocumentKind::TaskPlan,
            DocumentKind::CodeArtifact,
            DocumentKind::TestReport,
        ]
        .into_iter()
        .find(|k| k.as_str() == token)
    }

    /// Where the document lives inside a workspace's `docs/` directory.
    pub fn file_name(self) -> Option<&'static str> {
        match self {
            DocumentKind::Prd => Some("prd.md"),
            DocumentKind::SystemDesign => Some("system_design.md"),
            DocumentKind::TaskPlan => Some("tasks.md"),
            _ => None,
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A section value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum SectionBody {
    Text(String),
    List(Vec<String>),
    Pairs(Vec<(String, String)>),
}

impl SectionBody {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            SectionBody::Text(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            SectionBody::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_pairs(&self) -> Option<&[(String, String)]> {
        match self {
            SectionBody::Pairs(v) => Some(v),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            SectionBody::Text(t) => t.clone(),
            SectionBody::List(v) => fenced(&render_list_literal(&ListLiteral::Strings(v.clone()))),
            SectionBody::Pairs(v) => fenced(&render_list_literal(&ListLiteral::Pairs(v.clone()))),
        }
    }
}

fn fenced(literal: &str) -> String {
    format!("```python\n{literal}\n```")
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum DocumentError {
    #[error("empty document text")]
    EmptyInput,
    #[error("{kind} document violates its schema: missing {missing:?}; problems {problems:?}")]
    SchemaViolation {
        kind: DocumentKind,
        missing: Vec<String>,
        problems: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub kind: DocumentKind,
    pub sections: IndexMap<String, SectionBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_text: Option<String>,
}

impl Document {
    pub fn new(kind: DocumentKind) -> Self {
        Document {
            kind,
            sections: IndexMap::new(),
            source_text: None,
        }
    }

    pub fn with_section(mut self, title: impl Into<String>, body: SectionBody) -> Self {
        self.sections.insert(title.into(), body);
        self
    }

    pub fn section(&self, title: &str) -> Option<&SectionBody> {
        self.sections.get(title)
    }

    pub fn text(&self, title: &str) -> Option<&str> {
        self.section(title).and_then(SectionBody::as_text)
    }

    pub fn list(&self, title: &str) -> Option<&[String]> {
        self.section(title).and_then(SectionBody::as_list)
    }

    pub fn pairs(&self, title: &str) -> Option<&[(String, String)]> {
        self.section(title).and_then(SectionBody::as_pairs)
    }

    /// Equality ignoring `source_text`.
    pub fn same_content(&self, other: &Document) -> bool {
        self.kind == other.kind && self.sections == other.sections
    }

    /// Design `File list`.
    pub fn file_list(&self) -> &[String] {
        self.list("File list").unwrap_or(&[])
    }

    /// Plan `Task list`, in distribution order.
    pub fn task_list(&self) -> &[String] {
        self.list("Task list").unwrap_or(&[])
    }

    /// The `Logic Analysis` description for one task file.
    pub fn logic_for(&self, file: &str) -> Option<&str> {
        self.pairs("Logic Analysis")?
            .iter()
            .find(|(f, _)| f == file)
            .map(|(_, d)| d.as_str())
    }

    pub fn requirement_pool(&self) -> &[(String, String)] {
        self.pairs("Requirement Pool").unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<(), DocumentError> {
        let schema = schema_for(self.kind);
        let mut missing = Vec::new();
        let mut problems = Vec::new();
        for spec in schema {
            match self.sections.get(spec.title) {
                None if spec.required => missing.push(spec.title.to_string()),
                None => {}
                Some(body) => {
                    if let Err(p) = spec.shape.check(spec.title, body) {
                        problems.push(p);
                    }
                }
            }
        }
        if missing.is_empty() && problems.is_empty() {
            Ok(())
        } else {
            Err(DocumentError::SchemaViolation {
                kind: self.kind,
                missing,
                problems,
            })
        }
    }

    /// Schema sections in schema order, then extras in their current order.
    fn canonical_order(&mut self) {
        let schema = schema_for(self.kind);
        let mut ordered = IndexMap::with_capacity(self.sections.len());
        for spec in schema {
            if let Some(body) = self.sections.shift_remove(spec.title) {
                ordered.insert(spec.title.to_string(), body);
            }
        }
        ordered.extend(self.sections.drain(..));
        self.sections = ordered;
    }
}

/// Recognizes a body that is exactly one fenced block holding a list literal.
fn classify_body(body: String, shape: Shape) -> SectionBody {
    let lines: Vec<&str> = body.lines().collect();
    let fenced_whole = lines.len() >= 2
        && lines[0].trim_start().starts_with("```")
        && lines[lines.len() - 1].trim() == "```"
        && !lines[1..lines.len() - 1]
            .iter()
            .any(|l| l.trim_start().starts_with("```"));
    if fenced_whole {
        let inner = lines[1..lines.len() - 1].join("\n");
        match parse_list_literal(&inner) {
            Some(ListLiteral::Strings(v)) if v.is_empty() && shape.wants_pairs() => {
                return SectionBody::Pairs(Vec::new())
            }
            Some(ListLiteral::Strings(v)) => return SectionBody::List(v),
            Some(ListLiteral::Pairs(v)) => return SectionBody::Pairs(v),
            None => {}
        }
    }
    SectionBody::Text(body)
}

/// Parses `## `-sectioned text into a document of `kind`.
///
/// Alternate headings (e.g. `Python package name`) are mapped to their
/// canonical titles. Text before the first heading is dropped. Missing
/// required sections are an error, never a partial document.
pub fn parse_document(kind: DocumentKind, text: &str) -> Result<Document, DocumentError> {
    if text.trim().is_empty() {
        return Err(DocumentError::EmptyInput);
    }
    let schema = schema_for(kind);
    let extracted = extract_sections(text);
    let mut doc = Document::new(kind);
    for (title, body) in extracted.entries {
        if title.is_empty() {
            continue;
        }
        let spec = schema
            .iter()
            .find(|s| s.title == title || s.aliases.contains(&title.as_str()));
        let (title, shape) = match spec {
            Some(s) => (s.title.to_string(), s.shape),
            None => (title, Shape::Any),
        };
        doc.sections.insert(title, classify_body(body, shape));
    }
    doc.canonical_order();
    doc.validate()?;
    doc.source_text = Some(text.to_string());
    Ok(doc)
}

/// Canonical text: one `## title` per section in schema order, list values
/// as fenced literals, sections separated by one blank line.
pub fn render_document(doc: &Document) -> Result<String, DocumentError> {
    doc.validate()?;
    let mut doc = doc.clone();
    doc.canonical_order();
    let parts: Vec<String> = doc
        .sections
        .iter()
        .map(|(title, body)| {
            let rendered = body.render();
            if rendered.is_empty() {
                format!("## {title}\n")
            } else {
                format!("## {title}\n{rendered}\n")
            }
        })
        .collect();
    Ok(parts.join("\n"))
}

/// Normalizes a free-text body the way parsing would.
pub fn normalize_text(raw: &str) -> String {
    normalize_body(raw)
}

/// Cross-document check between a task plan and the design it came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyReport {
    /// Task files that no design file list mentions.
    pub warnings: Vec<String>,
    /// Duplicate task entries.
    pub errors: Vec<String>,
}

impl DependencyReport {
    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty() && self.errors.is_empty()
    }
}

pub fn validate_dependencies(plan: &Document, design: &Document) -> DependencyReport {
    let files: BTreeSet<&str> = design.file_list().iter().map(String::as_str).collect();
    let mut seen = BTreeSet::new();
    let mut report = DependencyReport::default();
    for task in plan.task_list() {
        if !seen.insert(task.as_str()) {
            report.errors.push(format!("duplicate task entry {task:?}"));
        } else if !files.contains(task.as_str()) {
            report
                .warnings
                .push(format!("task file {task:?} is not in the design file list"));
        }
    }
    report
}

/// Duplicate `Task list` entries, as schema-style problems.
pub fn duplicate_tasks(plan: &Document) -> Vec<String> {
    let mut seen = BTreeSet::new();
    plan.task_list()
        .iter()
        .filter(|t| !seen.insert(t.as_str()))
        .map(|t| format!("duplicate task entry {t:?}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(files: &[&str]) -> Document {
        Document::new(DocumentKind::SystemDesign)
            .with_section("Implementation approach", SectionBody::Text("x".into()))
            .with_section("Package name", SectionBody::Text("\"p\"".into()))
            .with_section(
                "File list",
                SectionBody::List(files.iter().map(|s| s.to_string()).collect()),
            )
            .with_section("Anything UNCLEAR", SectionBody::Text(String::new()))
    }

    fn plan(tasks: &[&str]) -> Document {
        Document::new(DocumentKind::TaskPlan)
            .with_section("Required packages", SectionBody::Text(String::new()))
            .with_section("Full API spec", SectionBody::Text(String::new()))
            .with_section("Logic Analysis", SectionBody::Pairs(vec![]))
            .with_section(
                "Task list",
                SectionBody::List(tasks.iter().map(|s| s.to_string()).collect()),
            )
            .with_section("Shared Knowledge", SectionBody::Text(String::new()))
            .with_section("Anything UNCLEAR", SectionBody::Text(String::new()))
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_document(DocumentKind::Prd, ""), Err(DocumentError::EmptyInput));
        assert_eq!(parse_document(DocumentKind::Prd, " \n"), Err(DocumentError::EmptyInput));
    }

    #[test]
    fn dependency_report_cases() {
        let d = design(&["main.py", "gui.py"]);
        assert!(validate_dependencies(&plan(&["main.py", "gui.py"]), &d).is_empty());

        let r = validate_dependencies(&plan(&["main.py", "extra.py"]), &d);
        assert_eq!(r.warnings.len(), 1);
        assert!(r.errors.is_empty());

        let r = validate_dependencies(&plan(&["main.py", "gui.py", "main.py"]), &d);
        assert_eq!(r.errors.len(), 1);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn empty_anything_unclear_renders_bare_heading() {
        let text = render_document(&design(&["a.py"])).unwrap();
        assert!(text.ends_with("## Anything UNCLEAR\n"), "{text}");
    }

    #[test]
    fn render_orders_by_schema_regardless_of_insertion() {
        let mut d = design(&["a.py"]);
        d.sections.reverse();
        let text = render_document(&d).unwrap();
        let titles: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("## ")).collect();
        assert_eq!(
            titles,
            ["Implementation approach", "Package name", "File list", "Anything UNCLEAR"]
        );
    }

    #[test]
    fn python_package_name_heading_is_canonicalized() {
        let text = "## Implementation approach\nx\n## Python package name\n```python\n\"cm\"\n```\n## File list\n```python\n[\"a.py\"]\n```\n## Anything UNCLEAR\n";
        let d = parse_document(DocumentKind::SystemDesign, text).unwrap();
        assert_eq!(d.text("Package name"), Some("```python\n\"cm\"\n```"));
        assert!(d.section("Python package name").is_none());
    }

    #[test]
    fn empty_file_list_is_a_violation() {
        let d = design(&[]);
        match d.validate() {
            Err(DocumentError::SchemaViolation { problems, missing, .. }) => {
                assert!(missing.is_empty());
                assert_eq!(problems.len(), 1);
                assert!(problems[0].contains("File list"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_priority_is_a_violation() {
        let text = "## Original Requirements\nr\n## Product Goals\ng\n## User Stories\nu\n## Competitive Analysis\nc\n## Requirement Analysis\na\n## Requirement Pool\n```python\n[(\"x\", \"P3\")]\n```\n## UI Design draft\nd\n## Anything UNCLEAR\n";
        let err = parse_document(DocumentKind::Prd, text).unwrap_err();
        assert!(matches!(err, DocumentError::SchemaViolation { ref problems, .. } if problems[0].contains("P3")));
        let ok = text.replace("P3", "P2");
        assert_eq!(parse_document(DocumentKind::Prd, &ok).unwrap().requirement_pool().len(), 1);
    }

    #[test]
    fn extra_sections_follow_schema_sections() {
        let text = "## Extra\ne\n## Implementation approach\nx\n## Package name\np\n## File list\n```\n[\"a.py\"]\n```\n## Anything UNCLEAR\n";
        let d = parse_document(DocumentKind::SystemDesign, text).unwrap();
        assert_eq!(d.sections.keys().last().unwrap(), "Extra");
        let again = parse_document(DocumentKind::SystemDesign, &render_document(&d).unwrap()).unwrap();
        assert!(again.same_content(&d));
    }

    #[test]
    fn fenced_non_list_stays_text() {
        let text = "## Implementation approach\nx\n## Package name\n```python\n\"\"\"\nnot a list\n\"\"\"\n```\n## File list\n[\"a.py\"]\n## Anything UNCLEAR\n";
        let err = parse_document(DocumentKind::SystemDesign, text).unwrap_err();
        // File list without a fence stays text and so fails the list shape.
        assert!(matches!(err, DocumentError::SchemaViolation { ref problems, .. } if problems[0].contains("File list")));
    }
}
