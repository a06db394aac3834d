use super::{DocumentKind, SectionBody};

pub const PRIORITIES: [&str; 3] = ["P0", "P1", "P2"];

/// Value shape a section must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Any,
    NonEmptyList,
    List,
    Pairs,
    /// `(requirement, priority)` pairs with priority in [`PRIORITIES`].
    PriorityPairs,
}

impl Shape {
    pub(super) fn wants_pairs(self) -> bool {
        matches!(self, Shape::Pairs | Shape::PriorityPairs)
    }

    pub fn check(self, title: &str, body: &SectionBody) -> Result<(), String> {
        match (self, body) {
            (Shape::Any, _) => Ok(()),
            (Shape::List, SectionBody::List(_)) => Ok(()),
            (Shape::NonEmptyList, SectionBody::List(v)) if !v.is_empty() => Ok(()),
            (Shape::NonEmptyList, SectionBody::List(_)) => {
                Err(format!("{title} must not be empty"))
            }
            (Shape::Pairs, SectionBody::Pairs(_)) => Ok(()),
            (Shape::PriorityPairs, SectionBody::Pairs(v)) => {
                match v.iter().find(|(_, p)| !PRIORITIES.contains(&p.as_str())) {
                    None => Ok(()),
                    Some((req, p)) => Err(format!(
                        "{title} entry {req:?} has priority {p:?}, expected one of P0, P1, P2"
                    )),
                }
            }
            (Shape::List | Shape::NonEmptyList, _) => {
                Err(format!("{title} must be a fenced list literal"))
            }
            (Shape::Pairs | Shape::PriorityPairs, _) => {
                Err(format!("{title} must be a fenced list of pairs"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SectionSpec {
    pub title: &'static str,
    /// Headings accepted in place of `title`.
    pub aliases: &'static [&'static str],
    pub shape: Shape,
    pub required: bool,
}

const fn req(title: &'static str, shape: Shape) -> SectionSpec {
    SectionSpec {
        title,
        aliases: &[],
        shape,
        required: true,
    }
}

const PRD: &[SectionSpec] = &[
    req("Original Requirements", Shape::Any),
    req("Product Goals", Shape::Any),
    req("User Stories", Shape::Any),
    req("Competitive Analysis", Shape::Any),
    req("Requirement Analysis", Shape::Any),
    req("Requirement Pool", Shape::PriorityPairs),
    req("UI Design draft", Shape::Any),
    req("Anything UNCLEAR", Shape::Any),
];

// The two diagram sections are opaque and optional: example designs often
// carry them as separate figures rather than inline text.
const SYSTEM_DESIGN: &[SectionSpec] = &[
    req("Implementation approach", Shape::Any),
    SectionSpec {
        title: "Package name",
        aliases: &["Python package name"],
        shape: Shape::Any,
        required: true,
    },
    req("File list", Shape::NonEmptyList),
    SectionSpec {
        title: "Data structures and interfaces",
        aliases: &[],
        shape: Shape::Any,
        required: false,
    },
    SectionSpec {
        title: "Program call flow",
        aliases: &[],
        shape: Shape::Any,
        required: false,
    },
    req("Anything UNCLEAR", Shape::Any),
];

const TASK_PLAN: &[SectionSpec] = &[
    SectionSpec {
        title: "Required packages",
        aliases: &["Required Python third-party packages"],
        shape: Shape::Any,
        required: true,
    },
    req("Full API spec", Shape::Any),
    req("Logic Analysis", Shape::Pairs),
    req("Task list", Shape::NonEmptyList),
    req("Shared Knowledge", Shape::Any),
    req("Anything UNCLEAR", Shape::Any),
];

pub fn schema_for(kind: DocumentKind) -> &'static [SectionSpec] {
    match kind {
        DocumentKind::Prd => PRD,
        DocumentKind::SystemDesign => SYSTEM_DESIGN,
        DocumentKind::TaskPlan => TASK_PLAN,
        DocumentKind::CodeArtifact | DocumentKind::TestReport => &[],
    }
}
