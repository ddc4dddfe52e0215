#![allow(dead_code)]

pub mod fixtures;
pub mod gen;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use tempfile::TempDir;

/// A scratch git repository driven through the `git` binary, with every
/// author and date scripted by the test.
pub struct FixtureRepo {
    dir: TempDir,
}

impl FixtureRepo {
    pub fn new() -> Self {
        let dir = tempfile::Builder::new()
            .prefix("fixture")
            .tempdir()
            .unwrap();
        let repo = Self { dir };
        repo.git(&["init", "-q", "-b", "main"]);
        repo.git(&["config", "commit.gpgsign", "false"]);
        repo
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn git(&self, args: &[&str]) -> String {
        self.git_as(args, "fixture", "2020-01-01T00:00:00Z")
    }

    fn git_as(&self, args: &[&str], author: &str, date: &str) -> String {
        self.git_full(args, author, &format!("{author}@example.org"), date)
    }

    fn git_full(&self, args: &[&str], author: &str, email: &str, date: &str) -> String {
        let out = Command::new("git")
            .args(args)
            .current_dir(self.path())
            .env("GIT_AUTHOR_NAME", author)
            .env("GIT_AUTHOR_EMAIL", email)
            .env("GIT_AUTHOR_DATE", date)
            .env("GIT_COMMITTER_NAME", author)
            .env("GIT_COMMITTER_EMAIL", format!("{author}@example.org"))
            .env("GIT_COMMITTER_DATE", date)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("HOME", self.path())
            .output()
            .expect("git runs");
        assert!(
            out.status.success(),
            "git {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn write(&self, path: &str, content: &str) -> &Self {
        let full = self.path().join(path);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(full, content).unwrap();
        self
    }

    pub fn write_bytes(&self, path: &str, content: &[u8]) -> &Self {
        fs::write(self.path().join(path), content).unwrap();
        self
    }

    pub fn remove(&self, path: &str) -> &Self {
        self.git(&["rm", "-q", path]);
        self
    }

    pub fn rename(&self, from: &str, to: &str) -> &Self {
        self.git(&["mv", from, to]);
        self
    }

    /// Stages everything and commits as `author` (email
    /// `<author>@example.org`) at `date` (`YYYY-MM-DD`). Returns the id.
    pub fn commit(&self, author: &str, date: &str) -> String {
        let date = format!("{date}T12:00:00Z");
        self.git(&["add", "-A"]);
        self.git_as(
            &["commit", "-q", "--allow-empty", "-m", "change"],
            author,
            &date,
        );
        self.head()
    }

    /// Like [`commit`](Self::commit) with an explicit author email.
    pub fn commit_as(&self, name: &str, email: &str, date: &str) -> String {
        let date = format!("{date}T12:00:00Z");
        self.git(&["add", "-A"]);
        self.git_full(
            &["commit", "-q", "--allow-empty", "-m", "change"],
            name,
            email,
            &date,
        );
        self.head()
    }

    pub fn head(&self) -> String {
        self.git(&["rev-parse", "HEAD"]).trim().to_owned()
    }

    pub fn branch(&self, name: &str) {
        self.git(&["checkout", "-q", "-b", name]);
    }

    pub fn checkout(&self, name: &str) {
        self.git(&["checkout", "-q", name]);
    }

    /// Merges `branch` into the current branch with a merge commit.
    pub fn merge(&self, branch: &str, author: &str, date: &str) -> String {
        let date = format!("{date}T12:00:00Z");
        self.git_as(
            &["merge", "-q", "--no-ff", "-m", "merge", branch],
            author,
            &date,
        );
        self.head()
    }
}

pub fn key(author: &str) -> String {
    format!("{author}@example.org")
}

pub fn out_dir() -> TempDir {
    tempfile::Builder::new().prefix("out").tempdir().unwrap()
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_varexp"))
}

// ---------------------------------------------------------------------
// Naive reference scanner: every query rescans the file from line 1.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Open,
    Branch,
    End,
    Define,
    Other,
}

fn keyword(line: &str) -> Option<(String, String)> {
    let rest = line.trim_start().strip_prefix('#')?.trim_start();
    let end = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    Some((rest[..end].to_owned(), rest[end..].to_owned()))
}

fn kw(line: &str) -> Option<Kw> {
    let (word, _) = keyword(line)?;
    Some(match word.as_str() {
        "if" | "ifdef" | "ifndef" => Kw::Open,
        "elif" | "else" | "elifdef" | "elifndef" => Kw::Branch,
        "endif" => Kw::End,
        "define" => Kw::Define,
        _ => Kw::Other,
    })
}

fn first_word(rest: &str) -> String {
    rest.trim_start()
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect()
}

/// Depth of line `i` (0-based) counting from the top of the file; the
/// directive lines of a block count as inside it.
fn depth_at(lines: &[&str], i: usize) -> usize {
    let mut depth = 0usize;
    for line in &lines[..i] {
        match kw(line) {
            Some(Kw::Open) => depth += 1,
            Some(Kw::End) => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    match kw(lines[i]) {
        Some(Kw::Open) => depth + 1,
        _ => depth,
    }
}

/// `(open, close)` line indices of an include guard.
fn guard(lines: &[&str]) -> Option<(usize, usize)> {
    let open = lines
        .iter()
        .position(|l| matches!(kw(l), Some(Kw::Open | Kw::Branch | Kw::End)))?;
    let (word, rest) = keyword(lines[open])?;
    let name = first_word(&rest);
    if word != "ifndef" || name.is_empty() {
        return None;
    }
    let next = (open + 1..lines.len()).find(|&j| !lines[j].trim().is_empty())?;
    match keyword(lines[next]) {
        Some((w, r)) if w == "define" && first_word(&r) == name => {}
        _ => return None,
    }
    let close = (open + 1..lines.len())
        .find(|&j| kw(lines[j]) == Some(Kw::End) && depth_at(lines, j) == depth_at(lines, open))?;
    let inner_branch = (open + 1..close)
        .any(|j| kw(lines[j]) == Some(Kw::Branch) && depth_at(lines, j) == depth_at(lines, open));
    let later = (close + 1..lines.len())
        .any(|j| matches!(kw(lines[j]), Some(Kw::Open | Kw::Branch | Kw::End)));
    (!inner_branch && !later).then_some((open, close))
}

/// `(is_variable, depth)` for every line, assuming balanced directives
/// without line continuations.
pub fn naive_annotate(content: &str, exclude_guards: bool) -> Vec<(bool, usize)> {
    let lines: Vec<&str> = content.split_inclusive('\n').collect();
    let guard = if exclude_guards { guard(&lines) } else { None };
    (0..lines.len())
        .map(|i| {
            let mut depth = depth_at(&lines, i);
            if guard.is_some_and(|(o, c)| (o..=c).contains(&i)) {
                depth -= 1;
            }
            (depth > 0, depth)
        })
        .collect()
}

// ---------------------------------------------------------------------
// Random directive-balanced C files.

#[derive(Debug, Clone)]
pub enum Node {
    Code(String),
    Block {
        open: String,
        branches: Vec<(String, Vec<Node>)>,
        close: String,
    },
}

const MACROS: &[&str] = &["FOO", "BAR", "HAVE_X", "DEBUG", "WIN32", "N"];

fn macro_name() -> impl Strategy<Value = String> {
    prop::sample::select(MACROS).prop_map(str::to_owned)
}

fn hash() -> impl Strategy<Value = &'static str> {
    prop::sample::select(&["#", "#", "# ", "  #", "\t#  "][..])
}

fn code_line() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => Just("int x = 1;".to_owned()),
        2 => Just("    return y;".to_owned()),
        2 => Just(String::new()),
        1 => Just("/* #ifdef FOO */".to_owned()),
        1 => Just("#include <stdio.h>".to_owned()),
        1 => Just("s = \"#endif\";".to_owned()),
        1 => macro_name().prop_map(|m| format!("#define {m} 1")),
        1 => Just("   ".to_owned()),
    ]
}

fn opener() -> impl Strategy<Value = String> {
    (hash(), macro_name(), macro_name(), 0..4u8).prop_map(|(h, a, b, k)| match k {
        0 => format!("{h}ifdef {a}"),
        1 => format!("{h}ifndef {a}"),
        2 => format!("{h}if defined({a}) && {b} > 1"),
        _ => format!("{h}if {a} /* note */"),
    })
}

fn brancher() -> impl Strategy<Value = String> {
    (hash(), macro_name(), 0..3u8).prop_map(|(h, a, k)| match k {
        0 => format!("{h}elif {a}"),
        1 => format!("{h}elif !defined({a})"),
        _ => format!("{h}elifdef {a}"),
    })
}

fn closer() -> impl Strategy<Value = String> {
    prop::sample::select(&["#endif", "#endif /* X */", "  # endif", "#endif // X"][..])
        .prop_map(str::to_owned)
}

pub fn node_tree() -> impl Strategy<Value = Vec<Node>> {
    let leaf = code_line().prop_map(Node::Code);
    let node = leaf.prop_recursive(5, 120, 6, |inner| {
        (
            opener(),
            prop::collection::vec(inner.clone(), 0..5),
            prop::collection::vec(
                (brancher(), prop::collection::vec(inner.clone(), 0..4)),
                0..3,
            ),
            prop::option::of(prop::collection::vec(inner, 0..4)),
            closer(),
        )
            .prop_map(|(open, body, elifs, else_body, close)| {
                let mut branches = vec![(String::new(), body)];
                branches.extend(elifs);
                if let Some(e) = else_body {
                    branches.push(("#else".to_owned(), e));
                }
                Node::Block {
                    open,
                    branches,
                    close,
                }
            })
    });
    prop::collection::vec(node, 0..12)
}

fn render_into(nodes: &[Node], out: &mut Vec<String>) {
    for n in nodes {
        match n {
            Node::Code(s) => out.push(s.clone()),
            Node::Block {
                open,
                branches,
                close,
            } => {
                out.push(open.clone());
                for (i, (head, body)) in branches.iter().enumerate() {
                    if i > 0 {
                        out.push(head.clone());
                    }
                    render_into(body, out);
                }
                out.push(close.clone());
            }
        }
    }
}

pub fn render(nodes: &[Node], guard: bool) -> String {
    let mut lines = Vec::new();
    if guard {
        lines.push("#ifndef GEN_H".to_owned());
        lines.push("#define GEN_H".to_owned());
    }
    render_into(nodes, &mut lines);
    if guard {
        lines.push("#endif".to_owned());
    }
    let mut s = lines.join("\n");
    if !lines.is_empty() {
        s.push('\n');
    }
    s
}

/// Balanced files of at most 200 lines, nesting at most 5 deep, an
/// include guard on roughly a quarter of them.
pub fn balanced_file() -> impl Strategy<Value = String> {
    (node_tree(), prop::bool::weighted(0.25))
        .prop_map(|(nodes, guard)| render(&nodes, guard))
        .prop_filter("at most 200 lines", |s| s.lines().count() <= 200)
}
