//! Line-level lexing of preprocessor directives.

use std::collections::BTreeSet;

/// Conditional directive keywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Conditional {
    If,
    Ifdef,
    Ifndef,
    Elif,
    Else,
    Endif,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LogicalKind {
    /// Anything that is not a recognized directive.
    Code { blank: bool },
    Conditional {
        kind: Conditional,
        expression: String,
    },
    /// `#define NAME ...`; only the macro name is kept.
    Define { name: Option<String> },
    /// `#include`, `#pragma`, `#error`, ...
    OtherDirective,
}

/// One logical line: a physical line plus any backslash continuations
/// absorbed into a directive.
#[derive(Debug, Clone)]
pub(crate) struct LogicalLine {
    /// 0-based index of the first physical line.
    pub first: usize,
    /// 0-based index of the last physical line, inclusive.
    pub last: usize,
    pub kind: LogicalKind,
}

fn strip_eol(line: &str) -> &str {
    let line = line.strip_suffix('\n').unwrap_or(line);
    line.strip_suffix('\r').unwrap_or(line)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_ascii_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_ascii_alphanumeric()
}

fn leading_identifier(s: &str) -> Option<&str> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, c)) if is_ident_start(c) => {}
        _ => return None,
    }
    let end = chars
        .find(|&(_, c)| !is_ident_continue(c))
        .map_or(s.len(), |(i, _)| i);
    Some(&s[..end])
}

/// Removes `/* */` and `//` comments from directive text. An unterminated
/// block comment swallows the rest of the text.
pub(crate) fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let block = rest.find("/*");
        let line = rest.find("//");
        match (block, line) {
            (Some(b), Some(l)) if l < b => {
                out.push_str(&rest[..l]);
                break;
            }
            (None, Some(l)) => {
                out.push_str(&rest[..l]);
                break;
            }
            (Some(b), _) => {
                out.push_str(&rest[..b]);
                out.push(' ');
                match rest[b + 2..].find("*/") {
                    Some(end) => rest = &rest[b + 2 + end + 2..],
                    None => break,
                }
            }
            (None, None) => {
                out.push_str(rest);
                break;
            }
        }
    }
    out
}

fn normalize_expression(text: &str) -> String {
    strip_comments(text)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Macro identifiers referenced by a conditional expression. `defined` is
/// an operator, numeric literals and character/string literals are skipped.
pub(crate) fn expression_identifiers(expression: &str) -> BTreeSet<String> {
    let mut idents = BTreeSet::new();
    let chars: Vec<char> = expression.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            if ident != "defined" {
                idents.insert(ident);
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && (is_ident_continue(chars[i]) || chars[i] == '.') {
                i += 1;
            }
        } else if c == '\'' || c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != c {
                if chars[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
        } else {
            i += 1;
        }
    }
    idents
}

fn classify_directive(body: &str) -> LogicalKind {
    // `body` is the text after `#`.
    let Some(keyword) = leading_identifier(body) else {
        return LogicalKind::OtherDirective;
    };
    let after = &body.trim_start()[keyword.len()..];
    let conditional = match keyword {
        "if" => Conditional::If,
        "ifdef" => Conditional::Ifdef,
        "ifndef" => Conditional::Ifndef,
        "elif" | "elifdef" | "elifndef" => Conditional::Elif,
        "else" => Conditional::Else,
        "endif" => Conditional::Endif,
        "define" => {
            return LogicalKind::Define {
                name: leading_identifier(after).map(str::to_owned),
            }
        }
        _ => return LogicalKind::OtherDirective,
    };
    let expression = match (conditional, keyword) {
        (Conditional::Else | Conditional::Endif, _) => String::new(),
        (Conditional::Ifdef | Conditional::Ifndef, _) => leading_identifier(&strip_comments(after))
            .unwrap_or_default()
            .to_owned(),
        (_, "elifdef") => leading_identifier(&strip_comments(after))
            .map(|m| format!("defined({m})"))
            .unwrap_or_default(),
        (_, "elifndef") => leading_identifier(&strip_comments(after))
            .map(|m| format!("!defined({m})"))
            .unwrap_or_default(),
        _ => normalize_expression(after),
    };
    LogicalKind::Conditional {
        kind: conditional,
        expression,
    }
}

/// Groups physical lines into logical lines. Physical lines are the
/// `split_inclusive('\n')` segments of the content.
pub(crate) fn logical_lines(physical: &[&str]) -> Vec<LogicalLine> {
    let mut out = Vec::with_capacity(physical.len());
    let mut i = 0;
    while i < physical.len() {
        let text = strip_eol(physical[i]);
        let trimmed = text.trim_start();
        let Some(body) = trimmed.strip_prefix('#') else {
            out.push(LogicalLine {
                first: i,
                last: i,
                kind: LogicalKind::Code {
                    blank: trimmed.is_empty(),
                },
            });
            i += 1;
            continue;
        };
        let first = i;
        let mut joined = String::from(body);
        while joined.ends_with('\\') && i + 1 < physical.len() {
            joined.pop();
            joined.push(' ');
            i += 1;
            joined.push_str(strip_eol(physical[i]));
        }
        out.push(LogicalLine {
            first,
            last: i,
            kind: classify_directive(&joined),
        });
        i += 1;
    }
    out
}
