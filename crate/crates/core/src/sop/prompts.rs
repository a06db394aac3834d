//! Default prompt templates, overridable per action.
//!
//! Templates use `{name}` placeholders. Unknown placeholders are left as-is.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ActionKind, RoleProfile};

const SYSTEM: &str = "You are {name}, the {profile} of a small software team.\nGoal: {goal}\nConstraints: {constraints}{skills}";

const WRITE_PRD: &str = r###"## Requirement
{idea}

## Task
Write a Product Requirements Document for the requirement above.
Answer with exactly these sections, each starting with a line "## <title>", in this order:
## Original Requirements
## Product Goals
## User Stories
## Competitive Analysis
## Requirement Analysis
## Requirement Pool
## UI Design draft
## Anything UNCLEAR

Product Goals, User Stories and Competitive Analysis are fenced lists of strings, e.g.
```python
[
    "first item",
    "second item"
]
```
Requirement Pool is a fenced list of (requirement, priority) pairs with priority P0, P1 or P2:
```python
[
    ("requirement", "P0")
]
```"###;

const WRITE_DESIGN: &str = r###"## Requirements
{requirements}

## Task
Design the system that implements these requirements in {language}.
Answer with these sections, each starting with a line "## <title>", in this order:
## Implementation approach
## Package name
## File list
## Data structures and interfaces
## Program call flow
## Anything UNCLEAR

File list is a fenced list of relative file names, e.g.
```python
[
    "main.py"
]
```
Data structures and interfaces and Program call flow hold diagram source text."###;

const WRITE_TASKS: &str = r###"## Design
{design}

## Task
Break the design into engineering tasks.
Answer with these sections, each starting with a line "## <title>", in this order:
## Required packages
## Full API spec
## Logic Analysis
## Task list
## Shared Knowledge
## Anything UNCLEAR

Logic Analysis is a fenced list of ("file name", "what it contains") pairs.
Task list is a fenced list of file names in the order they should be written, each at most once."###;

const WRITE_CODE: &str = r###"## Context
{context}

## Task
Write the complete contents of {file} in {language}.
{logic}
Implement only this file, following the design above. Return the code in a single fenced code block."###;

const WRITE_TESTS: &str = r###"## Code under test ({file})
```{language}
{code}
```

## Context
{context}

## Task
Write unit tests for {file} as a standalone file named {test_file} that imports the module under test.
Return the test code in a single fenced code block."###;

const HANDOVER: &str = r###"## Messages you received during the project
{transcript}

## Task
Critically summarize what went wrong or could be done better in your role, then state one short constraint you should follow in future projects.
Answer with two sections:
## Summary
## Constraint update"###;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptTemplates {
    /// Keyed by action token (`write_prd`, ...) or `system`.
    overrides: BTreeMap<String, String>,
}

impl PromptTemplates {
    pub fn with_override(mut self, key: impl Into<String>, template: impl Into<String>) -> Self {
        self.overrides.insert(key.into(), template.into());
        self
    }

    fn template(&self, key: &str) -> &str {
        if let Some(t) = self.overrides.get(key) {
            return t;
        }
        match key {
            "system" => SYSTEM,
            "write_prd" => WRITE_PRD,
            "write_design" => WRITE_DESIGN,
            "write_tasks" => WRITE_TASKS,
            "write_code" => WRITE_CODE,
            "write_tests" => WRITE_TESTS,
            "handover_feedback" => HANDOVER,
            _ => "{context}",
        }
    }

    pub fn user_prompt(&self, action: ActionKind, vars: &[(&str, &str)]) -> String {
        fill(self.template(action.as_str()), vars)
    }

    pub fn system_prompt(&self, role: &RoleProfile) -> String {
        let skills = if role.skills.is_empty() {
            String::new()
        } else {
            format!(
                "\nSkills: {}",
                role.skills.iter().cloned().collect::<Vec<_>>().join(", ")
            )
        };
        let constraints = if role.constraints.trim().is_empty() {
            "none"
        } else {
            role.constraints.as_str()
        };
        fill(
            self.template("system"),
            &[
                ("name", &role.name),
                ("profile", &role.profile),
                ("goal", &role.goal),
                ("constraints", constraints),
                ("skills", &skills),
            ],
        )
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    // Single pass so substituted values are never re-expanded.
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').map(|close| (&after[..close], close)) {
            Some((key, close)) => match vars.iter().find(|(k, _)| *k == key) {
                Some((_, value)) => {
                    out.push_str(value);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            },
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
