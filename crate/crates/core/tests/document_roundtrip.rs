use proptest::prelude::*;
use sopforge::document::{parse_document, render_document, Document, DocumentKind, SectionBody};

const PRD: &str = include_str!("../fixtures/color_meter_prd.md");
const DESIGN: &str = include_str!("../fixtures/color_meter_design.md");
const TASKS: &str = include_str!("../fixtures/drawing_app_tasks.md");

fn shape(doc: &Document) -> Vec<(String, Option<usize>)> {
    doc.sections
        .iter()
        .map(|(title, body)| {
            let len = match body {
                SectionBody::Text(_) => None,
                SectionBody::List(v) => Some(v.len()),
                SectionBody::Pairs(v) => Some(v.len()),
            };
            (title.clone(), len)
        })
        .collect()
}

fn fixpoint(kind: DocumentKind, text: &str) -> Document {
    let first = parse_document(kind, text).unwrap();
    let rendered = render_document(&first).unwrap();
    let second = parse_document(kind, &rendered).unwrap();
    assert!(first.same_content(&second), "{kind} changed across a round trip");
    assert_eq!(shape(&first), shape(&second));
    assert_eq!(render_document(&second).unwrap(), rendered);
    first
}

#[test]
fn sample_prd_round_trips() {
    let doc = fixpoint(DocumentKind::Prd, PRD);
    assert_eq!(doc.sections.len(), 8);
    assert_eq!(doc.list("Product Goals").unwrap().len(), 3);
    assert_eq!(doc.list("User Stories").unwrap().len(), 3);
    assert_eq!(doc.list("Competitive Analysis").unwrap().len(), 5);
    let pool = doc.requirement_pool();
    assert_eq!(pool.len(), 5);
    assert_eq!(
        pool[0],
        ("Design a user-friendly GUI for the color meter".to_string(), "P0".to_string())
    );
    assert_eq!(pool[4].1, "P1");
}

#[test]
fn sample_design_round_trips() {
    let doc = fixpoint(DocumentKind::SystemDesign, DESIGN);
    assert_eq!(doc.file_list(), ["main.py", "color_picker.py", "gui.py", "tests.py"]);
    assert!(doc.section("Package name").is_some());
}

#[test]
fn sample_tasks_round_trip() {
    let doc = fixpoint(DocumentKind::TaskPlan, TASKS);
    assert_eq!(
        doc.task_list(),
        ["main.py", "canvas.py", "tools.py", "color_picker.py", "file_manager.py"]
    );
    assert_eq!(doc.pairs("Logic Analysis").unwrap().len(), 5);
    assert!(doc.logic_for("tools.py").unwrap().contains("tool selection"));
    assert!(doc.section("Required packages").is_some());
    assert!(doc.section("Required Other language third-party packages").is_some());
}

fn item() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ,.'\"()\\\\-]{1,30}"
        .prop_map(|s| s.trim().to_string())
        .prop_filter("non-empty", |s| !s.is_empty())
}

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 ,.()\n-]{0,60}".prop_map(|s| {
        s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n").trim().to_string()
    })
}

prop_compose! {
    fn arb_prd()(
        texts in proptest::collection::vec(text(), 4),
        goals in proptest::collection::vec(item(), 0..5),
        stories in proptest::collection::vec(item(), 0..5),
        rivals in proptest::collection::vec(item(), 0..5),
        pool in proptest::collection::vec((item(), proptest::sample::select(vec!["P0", "P1", "P2"])), 0..5),
    ) -> Document {
        Document::new(DocumentKind::Prd)
            .with_section("Original Requirements", SectionBody::Text(texts[0].clone()))
            .with_section("Product Goals", SectionBody::List(goals))
            .with_section("User Stories", SectionBody::List(stories))
            .with_section("Competitive Analysis", SectionBody::List(rivals))
            .with_section("Requirement Analysis", SectionBody::Text(texts[1].clone()))
            .with_section("Requirement Pool", SectionBody::Pairs(pool.into_iter().map(|(a, b)| (a, b.to_string())).collect()))
            .with_section("UI Design draft", SectionBody::Text(texts[2].clone()))
            .with_section("Anything UNCLEAR", SectionBody::Text(texts[3].clone()))
    }
}

prop_compose! {
    fn arb_plan()(
        texts in proptest::collection::vec(text(), 4),
        logic in proptest::collection::vec((item(), item()), 0..5),
        tasks in proptest::collection::btree_set("[a-z_]{1,10}\\.py", 1..6),
    ) -> Document {
        Document::new(DocumentKind::TaskPlan)
            .with_section("Required packages", SectionBody::Text(texts[0].clone()))
            .with_section("Full API spec", SectionBody::Text(texts[1].clone()))
            .with_section("Logic Analysis", SectionBody::Pairs(logic))
            .with_section("Task list", SectionBody::List(tasks.into_iter().collect()))
            .with_section("Shared Knowledge", SectionBody::Text(texts[2].clone()))
            .with_section("Anything UNCLEAR", SectionBody::Text(texts[3].clone()))
    }
}

proptest! {
    #[test]
    fn rendered_prds_parse_back(doc in arb_prd()) {
        let text = render_document(&doc).unwrap();
        let back = parse_document(DocumentKind::Prd, &text).unwrap();
        prop_assert!(back.same_content(&doc), "{text}");
    }

    #[test]
    fn rendered_plans_parse_back(doc in arb_plan()) {
        let text = render_document(&doc).unwrap();
        let back = parse_document(DocumentKind::TaskPlan, &text).unwrap();
        prop_assert!(back.same_content(&doc), "{text}");
    }
}
