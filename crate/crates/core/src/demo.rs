//! A small bundled project for trying the pipeline offline.

use crate::llm::Playbook;

pub const COLOR_METER_IDEA: &str =
    "Write a Python3 GUI color meter that outputs the RGB values when it moves.";

/// JSONL playbook answering every request of a five-role run of
/// [`COLOR_METER_IDEA`]. The generated code passes its own tests.
pub const COLOR_METER_PLAYBOOK: &str = include_str!("../fixtures/color_meter.jsonl");

pub fn color_meter_playbook() -> Playbook {
    Playbook::parse_jsonl(COLOR_METER_PLAYBOOK).expect("bundled playbook is valid")
}
