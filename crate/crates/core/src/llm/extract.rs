//! Pulling structure out of free-form model output: fenced code blocks and
//! `## `-headed sections.

use indexmap::IndexMap;

/// One triple-backtick fenced block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    /// Text after the opening fence, e.g. `python`. May be empty.
    pub language: String,
    pub code: String,
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Every fenced block, in order. An unterminated final fence runs to the end
/// of the text.
pub fn extract_code_blocks(text: &str) -> Vec<CodeBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        match current.take() {
            None => {
                if is_fence(line) {
                    let language = line.trim_start()[3..].trim().to_string();
                    current = Some((language, Vec::new()));
                }
            }
            Some((language, mut lines)) => {
                if line.trim() == "```" {
                    blocks.push(CodeBlock {
                        language,
                        code: join_block(&lines),
                    });
                } else {
                    lines.push(line);
                    current = Some((language, lines));
                }
            }
        }
    }
    if let Some((language, lines)) = current {
        blocks.push(CodeBlock {
            language,
            code: join_block(&lines),
        });
    }
    blocks
}

fn join_block(lines: &[&str]) -> String {
    let mut code = lines.join("\n");
    if !code.is_empty() {
        code.push('\n');
    }
    code
}

/// Sections keyed by heading title, in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sections {
    pub entries: IndexMap<String, String>,
    /// Duplicate-heading notices. Later bodies replace earlier ones.
    pub warnings: Vec<String>,
}

/// Returns the heading title when `line` starts a `## ` section.
pub(crate) fn heading_title(line: &str) -> Option<&str> {
    line.strip_prefix("## ").map(str::trim)
}

/// Drops leading blank lines and trailing whitespace.
pub(crate) fn normalize_body(raw: &str) -> String {
    let mut lines: Vec<&str> = raw.lines().collect();
    while lines.first().is_some_and(|l| l.trim().is_empty()) {
        lines.remove(0);
    }
    lines.join("\n").trim_end().to_string()
}

/// Splits on line-initial `## `. Headings inside fenced blocks do not split.
/// Text before the first heading is keyed under the empty title when it is
/// not blank.
pub fn extract_sections(text: &str) -> Sections {
    let mut out = Sections::default();
    let mut title = String::new();
    let mut body: Vec<&str> = Vec::new();
    let mut in_fence = false;

    let flush = |title: &str, body: &[&str], out: &mut Sections| {
        let normalized = normalize_body(&body.join("\n"));
        if title.is_empty() && normalized.is_empty() {
            return;
        }
        if out.entries.contains_key(title) {
            let warning = format!("duplicate section heading {title:?}; keeping the later body");
            log::warn!("{warning}");
            out.warnings.push(warning);
        }
        out.entries.insert(title.to_string(), normalized);
    };

    for line in text.lines() {
        if !in_fence {
            if let Some(t) = heading_title(line) {
                flush(&title, &body, &mut out);
                title = t.to_string();
                body.clear();
                continue;
            }
        }
        if is_fence(line) {
            in_fence = !in_fence;
        }
        body.push(line);
    }
    flush(&title, &body, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block() {
        let blocks = extract_code_blocks("intro\n```python\nprint('hi')\n```\nafter");
        assert_eq!(
            blocks,
            vec![CodeBlock {
                language: "python".into(),
                code: "print('hi')\n".into()
            }]
        );
    }

    #[test]
    fn no_fences() {
        assert!(extract_code_blocks("just prose\n## heading").is_empty());
    }

    #[test]
    fn unterminated_fence_runs_to_end() {
        let blocks = extract_code_blocks("```\na\n```\n```js\nb\nc");
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[1].language, "js");
        assert_eq!(blocks[1].code, "b\nc\n");
    }

    #[test]
    fn text_without_headings_is_preamble() {
        let s = extract_sections("no headings here");
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.entries[""], "no headings here");
    }

    #[test]
    fn deeper_headings_stay_in_body() {
        let s = extract_sections("## A\n### sub\ntext\n## B\nx");
        assert_eq!(s.entries["A"], "### sub\ntext");
        assert_eq!(s.entries.keys().collect::<Vec<_>>(), ["A", "B"]);
    }

    #[test]
    fn duplicate_heading_last_writer_wins() {
        let s = extract_sections("## A\nfirst\n## B\nb\n## A\nsecond");
        assert_eq!(s.entries["A"], "second");
        assert_eq!(s.entries.keys().collect::<Vec<_>>(), ["A", "B"]);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn headings_inside_fences_do_not_split() {
        let s = extract_sections("## Code\n```\n## not a heading\n```\n## Next\n");
        assert_eq!(s.entries.len(), 2);
        assert!(s.entries["Code"].contains("## not a heading"));
    }
}
