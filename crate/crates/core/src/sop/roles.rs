//! The five standard roles and how a subset of them is wired into a chain.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{ActionKind, RoleProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    ProductManager,
    Architect,
    ProjectManager,
    Engineer,
    QaEngineer,
}

impl RoleKind {
    /// Canonical pipeline order.
    pub const ALL: [RoleKind; 5] = [
        RoleKind::ProductManager,
        RoleKind::Architect,
        RoleKind::ProjectManager,
        RoleKind::Engineer,
        RoleKind::QaEngineer,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            RoleKind::ProductManager => "product_manager",
            RoleKind::Architect => "architect",
            RoleKind::ProjectManager => "project_manager",
            RoleKind::Engineer => "engineer",
            RoleKind::QaEngineer => "qa_engineer",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            RoleKind::ProductManager => "Product Manager",
            RoleKind::Architect => "Architect",
            RoleKind::ProjectManager => "Project Manager",
            RoleKind::Engineer => "Engineer",
            RoleKind::QaEngineer => "QA Engineer",
        }
    }

    fn goal(self) -> &'static str {
        match self {
            RoleKind::ProductManager => {
                "Turn the requirement into a clear, prioritized product requirements document"
            }
            RoleKind::Architect => {
                "Design a simple, usable system with a concrete file list and interfaces"
            }
            RoleKind::ProjectManager => {
                "Break the design into ordered file-level tasks with dependencies analysed"
            }
            RoleKind::Engineer => "Write correct, complete, readable code that follows the design",
            RoleKind::QaEngineer => "Write unit tests that check the code against the requirements",
        }
    }

    fn constraints(self) -> &'static str {
        match self {
            RoleKind::ProductManager => "Keep the document concise and free of implementation detail",
            RoleKind::Architect => "Prefer the standard library and well-known packages",
            RoleKind::ProjectManager => "List every file exactly once, dependencies first",
            RoleKind::Engineer => "Write one file per answer and do not leave placeholders",
            RoleKind::QaEngineer => "Tests must run headless and finish quickly",
        }
    }

    /// Actions this role publishes.
    pub fn produces(self) -> BTreeSet<ActionKind> {
        match self {
            RoleKind::ProductManager => [ActionKind::WritePrd].into(),
            RoleKind::Architect => [ActionKind::WriteDesign].into(),
            RoleKind::ProjectManager => [ActionKind::WriteTasks].into(),
            RoleKind::Engineer => {
                [ActionKind::WriteCode, ActionKind::DebugCode, ActionKind::RunTests].into()
            }
            RoleKind::QaEngineer => [ActionKind::WriteTests].into(),
        }
    }

    fn document_action(self) -> Option<ActionKind> {
        match self {
            RoleKind::ProductManager => Some(ActionKind::WritePrd),
            RoleKind::Architect => Some(ActionKind::WriteDesign),
            RoleKind::ProjectManager => Some(ActionKind::WriteTasks),
            _ => None,
        }
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown role {0:?}")]
pub struct UnknownRole(pub String);

impl FromStr for RoleKind {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "product_manager" | "pm" | "product" => RoleKind::ProductManager,
            "architect" | "arch" => RoleKind::Architect,
            "project_manager" | "project" | "pjm" => RoleKind::ProjectManager,
            "engineer" | "eng" => RoleKind::Engineer,
            "qa_engineer" | "qa" => RoleKind::QaEngineer,
            _ => return Err(UnknownRole(s.to_string())),
        })
    }
}

/// A role placed in a pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub kind: RoleKind,
    pub profile: RoleProfile,
    /// Actions that must each have at least one message before this role acts.
    pub prerequisites: BTreeSet<ActionKind>,
    pub produces: BTreeSet<ActionKind>,
}

impl RoleSpec {
    /// The actions whose messages start this role's main work.
    pub fn triggers(&self) -> &BTreeSet<ActionKind> {
        &self.prerequisites
    }
}

/// Wires `kinds` into a chain. Each document role is triggered by the nearest
/// upstream document role present, or by the raw requirement if none is.
/// Order of `kinds` does not matter; duplicates are ignored.
pub fn chain(kinds: &[RoleKind]) -> Vec<RoleSpec> {
    let present: BTreeSet<RoleKind> = kinds.iter().copied().collect();
    let mut upstream_docs: Vec<ActionKind> = Vec::new();
    let mut specs = Vec::new();
    for kind in RoleKind::ALL {
        if !present.contains(&kind) {
            continue;
        }
        let trigger = upstream_docs
            .last()
            .copied()
            .unwrap_or(ActionKind::UserRequirement);
        let (prerequisites, watched): (BTreeSet<ActionKind>, BTreeSet<ActionKind>) = match kind {
            RoleKind::QaEngineer => ([ActionKind::WriteCode].into(), [ActionKind::WriteCode].into()),
            RoleKind::Engineer => {
                let mut watched: BTreeSet<ActionKind> = [ActionKind::UserRequirement].into();
                watched.extend(upstream_docs.iter().copied());
                if present.contains(&RoleKind::QaEngineer) {
                    watched.insert(ActionKind::WriteTests);
                }
                ([trigger].into(), watched)
            }
            _ => {
                let mut watched: BTreeSet<ActionKind> = [ActionKind::UserRequirement].into();
                watched.extend(upstream_docs.iter().copied());
                ([trigger].into(), watched)
            }
        };
        let profile = RoleProfile {
            name: kind.title().to_string(),
            profile: kind.title().to_string(),
            goal: kind.goal().to_string(),
            constraints: kind.constraints().to_string(),
            watched_actions: watched,
            skills: BTreeSet::new(),
        };
        specs.push(RoleSpec {
            kind,
            profile,
            prerequisites,
            produces: kind.produces(),
        });
        if let Some(doc) = kind.document_action() {
            upstream_docs.push(doc);
        }
    }
    specs
}
