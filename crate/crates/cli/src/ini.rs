//! Flat `[section]` / `key = value` reader with line numbers.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Section {
    pub line: usize,
    pub entries: BTreeMap<String, Entry>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub sections: BTreeMap<String, Section>,
}

/// A problem tied to a line of the source (0 when not line-specific).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Positioned {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for Positioned {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}: {}", self.line, self.msg)
        }
    }
}

/// Strips a `#` comment that is not inside double quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

pub fn parse(text: &str) -> (Document, Vec<Positioned>) {
    let mut doc = Document::default();
    let mut errors = Vec::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(Positioned {
                    line,
                    msg: format!("malformed section header `{s}`"),
                });
                current = None;
                continue;
            };
            let name = name.trim().to_string();
            if doc.sections.contains_key(&name) {
                errors.push(Positioned {
                    line,
                    msg: format!("duplicate section [{name}]"),
                });
            } else {
                doc.sections.insert(
                    name.clone(),
                    Section {
                        line,
                        entries: BTreeMap::new(),
                    },
                );
            }
            current = Some(name);
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            errors.push(Positioned {
                line,
                msg: format!("expected `key = value`, found `{s}`"),
            });
            continue;
        };
        let Some(sec) = current.as_ref().and_then(|c| doc.sections.get_mut(c)) else {
            errors.push(Positioned {
                line,
                msg: "key outside of any section".into(),
            });
            continue;
        };
        let key = k.trim().to_string();
        if sec.entries.contains_key(&key) {
            errors.push(Positioned {
                line,
                msg: format!("duplicate key `{key}`"),
            });
            continue;
        }
        sec.entries.insert(
            key,
            Entry {
                line,
                value: v.trim().to_string(),
            },
        );
    }
    (doc, errors)
}

/// Splits on commas outside double quotes.
pub fn split_list(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in s.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            ',' if !quoted => out.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    let last = cur.trim().to_string();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

pub fn unquote(s: &str) -> Option<&str> {
    s.strip_prefix('"')?.strip_suffix('"')
}
