use super::*;
use crate::demo::{color_meter_playbook, COLOR_METER_IDEA};
use crate::document::parse_document;
use crate::llm::{Playbook, PlaybookEntry};
use crate::model::TestOutcome;

const PRD: &str = include_str!("../../fixtures/color_meter_prd.md");

fn gateway(entries: Vec<PlaybookEntry>) -> Gateway {
    Gateway::new(Playbook::from_entries(entries))
}

fn plan_with(files: &[&str]) -> String {
    let list = files
        .iter()
        .map(|f| format!("    \"{f}\""))
        .collect::<Vec<_>>()
        .join(",\n");
    format!(
        "## Required packages\nnone\n## Full API spec\nnone\n## Logic Analysis\n```python\n[]\n```\n## Task list\n```python\n[\n{list}\n]\n```\n## Shared Knowledge\n-\n## Anything UNCLEAR\n-\n"
    )
}

fn code(body: &str) -> String {
    format!("```python\n{body}\n```")
}

fn kinds(result: &ProjectResult) -> Vec<ActionKind> {
    result.messages.iter().map(|m| m.cause_by).collect()
}

#[test]
fn full_pipeline_runs_in_sop_order() {
    let gw = Gateway::new(color_meter_playbook());
    let config = PipelineConfig::default();
    let result = run(&config, COLOR_METER_IDEA, &gw, &Sandbox::default()).unwrap();
    assert!(result.completed);
    let k = kinds(&result);
    let first = |a: ActionKind| k.iter().position(|&x| x == a).unwrap();
    assert!(first(ActionKind::UserRequirement) < first(ActionKind::WritePrd));
    assert!(first(ActionKind::WritePrd) < first(ActionKind::WriteDesign));
    assert!(first(ActionKind::WriteDesign) < first(ActionKind::WriteTasks));
    assert!(first(ActionKind::WriteTasks) < first(ActionKind::WriteCode));
    assert!(first(ActionKind::WriteCode) < first(ActionKind::WriteTests));
    assert!(first(ActionKind::WriteTests) < first(ActionKind::RunTests));

    let files: Vec<_> = result.code_files.iter().map(|c| c.file_name.as_str()).collect();
    assert_eq!(files, ["rgb.py", "color_picker.py", "main.py"]);
    assert_eq!(result.test_reports.len(), 3);
    assert!(result
        .test_reports
        .iter()
        .all(|r| r.outcome == TestOutcome::Passed && r.executions == 1));
    assert!(result
        .code_files
        .iter()
        .all(|c| c.status == CodeStatus::TestedPass));
    assert_eq!(result.ledger.totals.calls, 9);
    assert!(result.ledger.is_consistent());
    assert_eq!(result.documents.len(), 3);
}

#[test]
fn sequence_numbers_are_dense() {
    let gw = Gateway::new(color_meter_playbook());
    let result = run(&PipelineConfig::default(), COLOR_METER_IDEA, &gw, &Sandbox::default()).unwrap();
    for (i, m) in result.messages.iter().enumerate() {
        assert_eq!(m.seq, i as u64);
    }
}

#[test]
fn roles_only_remember_what_they_subscribe_to() {
    let gw = Gateway::new(color_meter_playbook());
    let config = PipelineConfig::default();
    let result = run(&config, COLOR_METER_IDEA, &gw, &Sandbox::default()).unwrap();
    for spec in &config.roles {
        let name = &spec.profile.name;
        for msg in result.transcript(name) {
            assert!(
                spec.profile.watched_actions.contains(&msg.cause_by) || msg.is_addressed_to(name),
                "{name} saw {:?}",
                msg.cause_by
            );
        }
    }
    assert!(result
        .transcript("QA Engineer")
        .iter()
        .all(|m| m.cause_by == ActionKind::WriteCode));
}

#[test]
fn runs_are_deterministic() {
    let strip = |r: &ProjectResult| -> Vec<(String, ActionKind, MessageContent)> {
        r.messages
            .iter()
            .map(|m| (m.sent_from.clone(), m.cause_by, m.content.clone()))
            .collect()
    };
    let a = run(
        &PipelineConfig::default(),
        COLOR_METER_IDEA,
        &Gateway::new(color_meter_playbook()),
        &Sandbox::default(),
    )
    .unwrap();
    let b = run(
        &PipelineConfig::default(),
        COLOR_METER_IDEA,
        &Gateway::new(color_meter_playbook()),
        &Sandbox::default(),
    )
    .unwrap();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn engineer_alone_writes_entry_file() {
    let gw = gateway(vec![PlaybookEntry::new(
        "Engineer",
        ActionKind::WriteCode,
        code("print('hi')"),
    )]);
    let config = PipelineConfig::with_roles(&[RoleKind::Engineer]);
    let result = run(&config, "say hi", &gw, &Sandbox::default()).unwrap();
    assert!(result.completed);
    assert_eq!(result.code_files.len(), 1);
    assert_eq!(result.code_files[0].file_name, "main.py");
    assert_eq!(
        kinds(&result),
        [ActionKind::UserRequirement, ActionKind::WriteCode]
    );
}

#[test]
fn architect_steps_once_on_a_prd() {
    let design = "## Implementation approach\nx\n## Package name\np\n## File list\n```python\n[\"a.py\"]\n```\n## Anything UNCLEAR\n-";
    let gw = gateway(vec![PlaybookEntry::new("Architect", ActionKind::WriteDesign, design)]);
    let config = PipelineConfig::default();
    let sandbox = Sandbox::default();
    let mut engine = Engine::new(&config, &gw, &sandbox).unwrap();

    assert!(engine.step("Architect").unwrap().is_empty());
    let prd = parse_document(DocumentKind::Prd, PRD).unwrap();
    engine
        .publish(MessageDraft::broadcast(
            "Product Manager",
            ActionKind::WritePrd,
            MessageContent::Document(prd),
        ))
        .unwrap();
    let out = engine.step("Architect").unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].cause_by, ActionKind::WriteDesign);
    assert_eq!(out[0].sent_from, "Architect");
    assert!(engine.step("Architect").unwrap().is_empty());
}

#[test]
fn engineer_writes_one_file_per_task_in_order() {
    let gw = gateway(vec![
        PlaybookEntry::new("Engineer", ActionKind::WriteCode, code("a = 1")),
        PlaybookEntry::new("Engineer", ActionKind::WriteCode, code("b = 2")),
        PlaybookEntry::new("Engineer", ActionKind::WriteCode, code("c = 3")),
    ]);
    let config = PipelineConfig::default();
    let sandbox = Sandbox::default();
    let mut engine = Engine::new(&config, &gw, &sandbox).unwrap();
    let plan = parse_document(DocumentKind::TaskPlan, &plan_with(&["z.py", "y.py", "x.py"])).unwrap();
    engine
        .publish(MessageDraft::broadcast(
            "Project Manager",
            ActionKind::WriteTasks,
            MessageContent::Document(plan),
        ))
        .unwrap();
    let out = engine.step("Engineer").unwrap();
    let names: Vec<_> = out
        .iter()
        .map(|m| {
            assert_eq!(m.cause_by, ActionKind::WriteCode);
            m.content.as_code().unwrap().file_name.clone()
        })
        .collect();
    assert_eq!(names, ["z.py", "y.py", "x.py"]);
}

#[test]
fn tests_in_task_list_are_left_to_qa() {
    let gw = gateway(vec![PlaybookEntry::new("Engineer", ActionKind::WriteCode, code("a = 1"))]);
    let config = PipelineConfig::default();
    let sandbox = Sandbox::default();
    let mut engine = Engine::new(&config, &gw, &sandbox).unwrap();
    let plan = parse_document(DocumentKind::TaskPlan, &plan_with(&["a.py", "tests.py"])).unwrap();
    engine
        .publish(MessageDraft::broadcast(
            "Project Manager",
            ActionKind::WriteTasks,
            MessageContent::Document(plan),
        ))
        .unwrap();
    assert_eq!(engine.step("Engineer").unwrap().len(), 1);
}

#[test]
fn empty_idea_is_rejected() {
    let gw = gateway(vec![]);
    let err = run(&PipelineConfig::default(), "  \n", &gw, &Sandbox::default()).unwrap_err();
    assert!(matches!(err, SopError::IdeaEmpty));
    assert_eq!(gw.ledger().totals.calls, 0);
}

#[test]
fn invalid_pipelines_are_rejected() {
    let qa_only = PipelineConfig::with_roles(&[RoleKind::QaEngineer]);
    assert!(matches!(qa_only.validate(), Err(SopError::InvalidConfig(_))));

    let mut twice = PipelineConfig::default();
    twice.roles[1].produces.insert(ActionKind::WritePrd);
    assert!(matches!(twice.validate(), Err(SopError::InvalidConfig(_))));

    let mut cyclic = PipelineConfig::default();
    cyclic.roles[0].prerequisites.insert(ActionKind::WriteTasks);
    let err = cyclic.validate().unwrap_err().to_string();
    assert!(err.contains("cycle"), "{err}");

    let mut no_rounds = PipelineConfig::default();
    no_rounds.max_rounds = 0;
    assert!(no_rounds.validate().is_err());
}

#[test]
fn ablation_chains_validate() {
    use RoleKind::*;
    for kinds in [
        vec![Engineer],
        vec![ProductManager, Engineer],
        vec![ProductManager, Architect, Engineer],
        vec![ProductManager, ProjectManager, Engineer],
        vec![ProductManager, Architect, ProjectManager, Engineer],
        RoleKind::ALL.to_vec(),
    ] {
        PipelineConfig::with_roles(&kinds).validate().unwrap();
    }
}

#[test]
fn round_limit_returns_partial_result() {
    let gw = Gateway::new(color_meter_playbook());
    let mut config = PipelineConfig::default();
    config.max_rounds = 1;
    let dir = tempfile::tempdir().unwrap();
    config.workspace = Some(dir.path().to_path_buf());
    match run(&config, COLOR_METER_IDEA, &gw, &Sandbox::default()) {
        Err(SopError::RoundLimitExceeded(partial)) => {
            assert_eq!(partial.rounds, 1);
            assert!(partial.document(DocumentKind::TaskPlan).is_some());
            assert_eq!(partial.test_files.len(), 3);
            assert!(partial.test_reports.is_empty());
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(dir.path().join("docs/prd.md").exists());
    assert!(dir.path().join("logs/messages.jsonl").exists());
}

#[test]
fn backend_failure_names_role_and_action() {
    let gw = gateway(vec![]);
    let err = run(&PipelineConfig::default(), "an idea", &gw, &Sandbox::default()).unwrap_err();
    assert!(err.is_backend_failure());
    match err {
        SopError::Action { role, action, .. } => {
            assert_eq!(role, "Product Manager");
            assert_eq!(action, ActionKind::WritePrd);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_prd_is_reasked_then_fails() {
    let gw = gateway(vec![
        PlaybookEntry::new("Product Manager", ActionKind::WritePrd, "## Product Goals\nnothing"),
        PlaybookEntry::new("Product Manager", ActionKind::WritePrd, "still not a PRD"),
    ]);
    let err = run(&PipelineConfig::default(), "idea", &gw, &Sandbox::default()).unwrap_err();
    assert!(matches!(
        err,
        SopError::Action {
            source: ActionError::Schema(_),
            ..
        }
    ));
    assert_eq!(gw.ledger().totals.calls, 2);
}

#[test]
fn workspace_holds_all_outputs() {
    let gw = Gateway::new(color_meter_playbook());
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig::default().workspace(dir.path());
    let result = run(&config, COLOR_METER_IDEA, &gw, &Sandbox::default()).unwrap();
    for path in [
        "docs/prd.md",
        "docs/system_design.md",
        "docs/tasks.md",
        "src/rgb.py",
        "src/color_picker.py",
        "src/main.py",
        "tests/test_rgb.py",
        "ledger.json",
        "logs/messages.jsonl",
        "logs/feedback/rgb.py/attempt_0/result.json",
    ] {
        assert!(dir.path().join(path).exists(), "missing {path}");
    }
    let log = crate::pool::log::read_log(&dir.path().join("logs/messages.jsonl")).unwrap();
    assert_eq!(log.len(), result.messages.len());
    let prd = std::fs::read_to_string(dir.path().join("docs/prd.md")).unwrap();
    let reparsed = parse_document(DocumentKind::Prd, &prd).unwrap();
    assert!(reparsed.same_content(result.document(DocumentKind::Prd).unwrap()));
}

#[test]
fn feedback_can_be_disabled() {
    let gw = Gateway::new(color_meter_playbook());
    let mut config = PipelineConfig::default();
    config.feedback = false;
    let result = run(&config, COLOR_METER_IDEA, &gw, &Sandbox::default()).unwrap();
    assert!(result.completed);
    assert!(result.test_reports.is_empty());
    assert_eq!(result.test_files.len(), 3);
}

#[test]
fn failing_tests_trigger_debug_revisions() {
    let failing_test = "import unittest\nimport main\n\nclass T(unittest.TestCase):\n    def test_value(self):\n        self.assertEqual(main.VALUE, 2)\n\nif __name__ == '__main__':\n    unittest.main()";
    let gw = gateway(vec![
        PlaybookEntry::new("Engineer", ActionKind::WriteCode, code("VALUE = 1")),
        PlaybookEntry::new("QA Engineer", ActionKind::WriteTests, code(failing_test)),
        PlaybookEntry::new("Engineer", ActionKind::DebugCode, code("VALUE = 2")),
    ]);
    let config = PipelineConfig::with_roles(&[RoleKind::Engineer, RoleKind::QaEngineer]);
    let result = run(&config, "value two", &gw, &Sandbox::default()).unwrap();
    let report = &result.test_reports[0];
    assert_eq!(report.outcome, TestOutcome::Passed);
    assert_eq!(report.retries_used, 1);
    assert_eq!(report.executions, 2);
    let main = result.code_file("main.py").unwrap();
    assert_eq!(main.revision, 1);
    assert_eq!(main.code, "VALUE = 2\n");
    let debug = result
        .messages
        .iter()
        .find(|m| m.cause_by == ActionKind::DebugCode)
        .unwrap();
    assert!(debug.is_addressed_to("Engineer"));
}
