//! Bracketed list literals as they appear inside fenced blocks:
//! `["a", "b"]` and `[("a", "P0"), ("b", "P1")]`.

/// A parsed list literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ListLiteral {
    Strings(Vec<String>),
    Pairs(Vec<(String, String)>),
}

enum Item {
    Str(String),
    Pair(String, String),
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl Cursor<'_> {
    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else if c == '#' {
                while let Some(c) = self.chars.next() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_blank();
        if self.chars.peek() == Some(&want) {
            self.chars.next();
            true
        } else {
            false
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_blank();
        self.chars.peek().copied()
    }

    /// One or more adjacent quoted strings, concatenated.
    fn string(&mut self) -> Option<String> {
        let mut out = String::new();
        let mut any = false;
        while let Some(quote) = self.peek().filter(|c| *c == '"' || *c == '\'') {
            self.chars.next();
            any = true;
            loop {
                match self.chars.next()? {
                    c if c == quote => break,
                    '\n' => return None,
                    '\\' => match self.chars.next()? {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        '\\' => out.push('\\'),
                        '\'' => out.push('\''),
                        '"' => out.push('"'),
                        'u' => {
                            let hex: String = (0..4).filter_map(|_| self.chars.next()).collect();
                            let code = u32::from_str_radix(&hex, 16).ok()?;
                            out.push(char::from_u32(code)?);
                        }
                        other => {
                            out.push('\\');
                            out.push(other);
                        }
                    },
                    c => out.push(c),
                }
            }
        }
        any.then_some(out)
    }

    fn item(&mut self) -> Option<Item> {
        if self.eat('(') {
            let first = self.string()?;
            if !self.eat(',') {
                return None;
            }
            let second = self.string()?;
            self.eat(',');
            if !self.eat(')') {
                return None;
            }
            Some(Item::Pair(first, second))
        } else {
            self.string().map(Item::Str)
        }
    }
}

/// Parses a list of strings or a list of string pairs. Returns `None` for
/// anything else, including mixed lists.
pub fn parse_list_literal(src: &str) -> Option<ListLiteral> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
    };
    if !cur.eat('[') {
        return None;
    }
    let mut items = Vec::new();
    loop {
        if cur.eat(']') {
            break;
        }
        items.push(cur.item()?);
        if !cur.eat(',') {
            if !cur.eat(']') {
                return None;
            }
            break;
        }
    }
    if cur.peek().is_some() {
        return None;
    }

    if items.iter().all(|i| matches!(i, Item::Str(_))) {
        Some(ListLiteral::Strings(
            items
                .into_iter()
                .map(|i| match i {
                    Item::Str(s) => s,
                    Item::Pair(..) => unreachable!(),
                })
                .collect(),
        ))
    } else if items.iter().all(|i| matches!(i, Item::Pair(..))) {
        Some(ListLiteral::Pairs(
            items
                .into_iter()
                .map(|i| match i {
                    Item::Pair(a, b) => (a, b),
                    Item::Str(_) => unreachable!(),
                })
                .collect(),
        ))
    } else {
        None
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical multi-line rendering, one item per line.
pub fn render_list_literal(list: &ListLiteral) -> String {
    let items: Vec<String> = match list {
        ListLiteral::Strings(v) => v.iter().map(|s| quote(s)).collect(),
        ListLiteral::Pairs(v) => v
            .iter()
            .map(|(a, b)| format!("({}, {})", quote(a), quote(b)))
            .collect(),
    };
    if items.is_empty() {
        return "[]".to_string();
    }
    let body: Vec<String> = items.iter().map(|i| format!("    {i}")).collect();
    format!("[\n{}\n]", body.join(",\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strings_with_trailing_comma_and_single_quotes() {
        assert_eq!(
            parse_list_literal("[\n 'a',\n \"b\",\n]"),
            Some(ListLiteral::Strings(vec!["a".into(), "b".into()]))
        );
    }

    #[test]
    fn pairs() {
        assert_eq!(
            parse_list_literal(r#"[("x.py", "does x"), ('y', "P0")]"#),
            Some(ListLiteral::Pairs(vec![
                ("x.py".into(), "does x".into()),
                ("y".into(), "P0".into())
            ]))
        );
    }

    #[test]
    fn rejects_non_lists() {
        assert_eq!(parse_list_literal("\"color_meter\""), None);
        assert_eq!(parse_list_literal("\"\"\"\ntext\n\"\"\""), None);
        assert_eq!(parse_list_literal("[\"a\", (\"b\", \"c\")]"), None);
        assert_eq!(parse_list_literal("[1, 2]"), None);
        assert_eq!(parse_list_literal("[\"a\"] trailing"), None);
    }

    #[test]
    fn empty_list() {
        assert_eq!(parse_list_literal("[ ]"), Some(ListLiteral::Strings(vec![])));
        assert_eq!(render_list_literal(&ListLiteral::Strings(vec![])), "[]");
    }

    #[test]
    fn escapes_and_comments() {
        assert_eq!(
            parse_list_literal("[\"it's \\\"q\\\"\\n\", # note\n 'x\\'y']"),
            Some(ListLiteral::Strings(vec!["it's \"q\"\n".into(), "x'y".into()]))
        );
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(
            items in proptest::collection::vec("[\\PC\n\t\"'\\\\#]{0,12}", 0..6),
            pairs in proptest::collection::vec(("[\\PC\"]{0,8}", "P[0-2]"), 0..5),
        ) {
            let list = ListLiteral::Strings(items);
            prop_assert_eq!(parse_list_literal(&render_list_literal(&list)), Some(list));
            if !pairs.is_empty() {
                let list = ListLiteral::Pairs(pairs);
                prop_assert_eq!(parse_list_literal(&render_list_literal(&list)), Some(list));
            }
        }
    }
}
