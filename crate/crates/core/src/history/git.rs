//! Thin driver over the `git` command line.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use chrono::{DateTime, Duration, TimeZone, Utc};
use log::warn;

use super::{filter_source_files, resolve_identity, ChangeKind, CommitRecord, FileChange};
use crate::error::{Error, Result};
use crate::warnings::{Warning, WarningKind};

const RECORD_SEP: u8 = 0x1e;
const FIELD_SEP: char = '\u{1f}';
const NULL_SHA: &str = "0000000000000000000000000000000000000000";

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    /// Branch or revision to walk; `None` walks `HEAD`.
    pub branch: Option<String>,
    pub since: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
    pub extensions: Vec<String>,
    /// Minimum similarity, in percent, for git to pair a delete and an add
    /// as a rename.
    pub rename_threshold: u8,
    /// Walk only the first-parent chain. By default every commit reachable
    /// from the tip is walked, parents before children.
    pub first_parent: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            branch: None,
            since: None,
            until: None,
            extensions: super::DEFAULT_EXTENSIONS
                .iter()
                .map(|e| e.to_string())
                .collect(),
            rename_threshold: 50,
            first_parent: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GitRepo {
    workdir: PathBuf,
}

impl GitRepo {
    pub fn open(path: &Path) -> Result<Self> {
        if !path.is_dir() {
            return Err(Error::RepoNotFound(path.to_owned()));
        }
        let repo = Self {
            workdir: path.to_owned(),
        };
        let ok = repo
            .command()
            .args(["rev-parse", "--git-dir"])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map_err(|e| Error::Git(format!("cannot run git: {e}")))?
            .success();
        if ok {
            Ok(repo)
        } else {
            Err(Error::RepoNotFound(path.to_owned()))
        }
    }

    pub fn path(&self) -> &Path {
        &self.workdir
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new("git");
        cmd.arg("-C").arg(&self.workdir).args([
            "-c",
            "log.showSignature=false",
            "-c",
            "core.quotePath=false",
        ]);
        cmd
    }

    fn output(&self, args: &[&str]) -> Result<Vec<u8>> {
        let out = self
            .command()
            .args(args)
            .output()
            .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
        if !out.status.success() {
            return Err(Error::Git(format!(
                "git {} failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    /// Full commit id of `rev`, or `None` if it does not name a commit.
    pub fn resolve_commit(&self, rev: &str) -> Result<Option<String>> {
        let spec = format!("{rev}^{{commit}}");
        let out = self
            .command()
            .args(["rev-parse", "--verify", "--quiet", &spec])
            .stderr(Stdio::null())
            .output()
            .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
        if !out.status.success() {
            return Ok(None);
        }
        Ok(Some(String::from_utf8_lossy(&out.stdout).trim().to_owned()))
    }

    /// Commit that `branch` (or `HEAD`) resolves to. `Ok(None)` only for the
    /// implicit `HEAD` of a repository without commits.
    pub fn tip(&self, branch: Option<&str>) -> Result<Option<String>> {
        match branch {
            Some(b) => self
                .resolve_commit(b)?
                .map(Some)
                .ok_or_else(|| Error::BranchNotFound(b.to_owned())),
            None => self.resolve_commit("HEAD"),
        }
    }

    /// Commits reachable from the tip (or along its first-parent chain),
    /// oldest first, parents before children. Merge commits are yielded
    /// with `is_merge` set and no changes.
    pub fn enumerate_commits(&self, options: &EnumerateOptions) -> Result<CommitStream> {
        let Some(tip) = self.tip(options.branch.as_deref())? else {
            return Ok(CommitStream::empty(options.clone()));
        };
        let rename = format!("-M{}%", options.rename_threshold);
        let walk = if options.first_parent {
            "--first-parent"
        } else {
            "--date-order"
        };
        let mut child = self
            .command()
            .args([
                "log",
                walk,
                "--reverse",
                "--no-abbrev",
                "--raw",
                "-z",
                "--diff-merges=off",
                &rename,
                "--format=%x1e%H%x1f%P%x1f%an%x1f%ae%x1f%at%x1f%ct",
                &tip,
                "--",
            ])
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Git(format!("cannot run git log: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(CommitStream {
            child: Some(child),
            reader: Some(BufReader::new(stdout)),
            options: options.clone(),
            latest_valid: Utc::now() + Duration::days(1),
            warnings: Vec::new(),
            skipped: 0,
        })
    }

    /// Regular source files in the tree of `commit`, as (path, blob id).
    pub fn list_tree(&self, commit: &str, extensions: &[String]) -> Result<Vec<(String, String)>> {
        let out = self.output(&["ls-tree", "-r", "-z", "--full-tree", commit])?;
        let mut files = Vec::new();
        for entry in out.split(|&b| b == 0).filter(|e| !e.is_empty()) {
            let entry = String::from_utf8_lossy(entry);
            let Some((meta, path)) = entry.split_once('\t') else {
                continue;
            };
            let mut parts = meta.split(' ');
            let (Some(mode), Some(kind), Some(id)) = (parts.next(), parts.next(), parts.next())
            else {
                continue;
            };
            if kind == "blob" && is_regular_mode(mode) && filter_source_files(path, extensions) {
                files.push((path.to_owned(), id.to_owned()));
            }
        }
        Ok(files)
    }

    pub fn blobs(&self) -> Result<BlobReader> {
        let mut child = self
            .command()
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Git(format!("cannot run git cat-file: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(BlobReader {
            child,
            stdin: Some(stdin),
            stdout,
        })
    }
}

fn is_regular_mode(mode: &str) -> bool {
    matches!(mode, "100644" | "100755" | "000000")
}

/// Persistent `git cat-file --batch` reader.
pub struct BlobReader {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl BlobReader {
    pub fn read(&mut self, id: &str) -> Result<Vec<u8>> {
        let stdin = self.stdin.as_mut().expect("open until drop");
        writeln!(stdin, "{id}")
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Git(format!("cat-file write: {e}")))?;
        let mut header = String::new();
        self.stdout
            .read_line(&mut header)
            .map_err(|e| Error::Git(format!("cat-file read: {e}")))?;
        let mut parts = header.split_whitespace();
        let (_, kind, size) = (parts.next(), parts.next(), parts.next());
        let size: usize = match (kind, size.and_then(|s| s.parse().ok())) {
            (Some(_), Some(size)) => size,
            (None, _) => return Err(Error::Git(format!("cat-file closed while reading {id}"))),
            _ => return Err(Error::MissingObject(id.to_owned())),
        };
        let mut buf = vec![0; size + 1];
        self.stdout
            .read_exact(&mut buf)
            .map_err(|e| Error::Git(format!("cat-file read: {e}")))?;
        buf.pop();
        Ok(buf)
    }
}

impl Drop for BlobReader {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.wait();
    }
}

/// Streaming parser over `git log` output.
pub struct CommitStream {
    child: Option<Child>,
    reader: Option<BufReader<ChildStdout>>,
    options: EnumerateOptions,
    latest_valid: DateTime<Utc>,
    warnings: Vec<Warning>,
    skipped: usize,
}

impl CommitStream {
    fn empty(options: EnumerateOptions) -> Self {
        Self {
            child: None,
            reader: None,
            options,
            latest_valid: Utc::now(),
            warnings: Vec::new(),
            skipped: 0,
        }
    }

    /// Warnings raised so far (corrupt commits, clamped dates).
    pub fn take_warnings(&mut self) -> Vec<Warning> {
        std::mem::take(&mut self.warnings)
    }

    /// Number of commits skipped as corrupt.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn next_chunk(&mut self) -> Result<Option<Vec<u8>>> {
        let Some(reader) = self.reader.as_mut() else {
            return Ok(None);
        };
        loop {
            let mut chunk = Vec::new();
            let n = reader
                .read_until(RECORD_SEP, &mut chunk)
                .map_err(|e| Error::Git(format!("reading git log: {e}")))?;
            if n == 0 {
                self.finish()?;
                return Ok(None);
            }
            if chunk.last() == Some(&RECORD_SEP) {
                chunk.pop();
            }
            // The stream starts with a separator, giving one empty chunk.
            if !chunk.is_empty() {
                return Ok(Some(chunk));
            }
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.reader = None;
        if let Some(mut child) = self.child.take() {
            let mut stderr = String::new();
            if let Some(mut err) = child.stderr.take() {
                let _ = err.read_to_string(&mut stderr);
            }
            let status = child
                .wait()
                .map_err(|e| Error::Git(format!("waiting for git log: {e}")))?;
            if !status.success() {
                return Err(Error::Git(format!("git log failed: {}", stderr.trim())));
            }
        }
        Ok(())
    }

    fn in_range(&self, ts: DateTime<Utc>) -> bool {
        self.options.since.map_or(true, |s| ts >= s) && self.options.until.map_or(true, |u| ts <= u)
    }

    fn parse_chunk(&mut self, chunk: &[u8]) -> std::result::Result<CommitRecord, String> {
        let (header, body) = match chunk.iter().position(|&b| b == 0) {
            Some(i) => (&chunk[..i], &chunk[i + 1..]),
            None => (chunk, &[][..]),
        };
        let header = String::from_utf8_lossy(header);
        let fields: Vec<&str> = header.trim_end_matches('\n').split(FIELD_SEP).collect();
        let [id, parents, name, email, author_ts, committer_ts] = fields[..] else {
            return Err(format!("malformed header: {header:?}"));
        };
        let commit_id = id.trim().to_owned();
        if commit_id.len() != 40 || !commit_id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format!("malformed commit id {commit_id:?}"));
        }
        let author = resolve_identity(name, email).map_err(|e| format!("{commit_id}: {e}"))?;
        let parse_ts = |s: &str| {
            s.trim()
                .parse::<i64>()
                .ok()
                .and_then(|t| Utc.timestamp_opt(t, 0).single())
        };
        let committed = parse_ts(committer_ts);
        let earliest = Utc.with_ymd_and_hms(1990, 1, 1, 0, 0, 0).unwrap();
        let timestamp = match parse_ts(author_ts) {
            Some(t) if t >= earliest && t <= self.latest_valid => t,
            authored => {
                let Some(c) = committed else {
                    return Err(format!("{commit_id}: unparsable dates"));
                };
                let msg = format!(
                    "author date {} out of range, using committer date {c}",
                    authored.map_or_else(|| author_ts.to_owned(), |t| t.to_rfc3339())
                );
                warn!("{commit_id}: {msg}");
                self.warnings
                    .push(Warning::new(WarningKind::ClampedDate, msg).at_commit(&commit_id));
                c
            }
        };
        let is_merge = parents.split_whitespace().count() > 1;
        let changes = if is_merge {
            Vec::new()
        } else {
            parse_raw(body, &self.options.extensions)
        };
        Ok(CommitRecord {
            commit_id,
            author,
            timestamp,
            is_merge,
            changes,
        })
    }
}

fn blob(id: &str) -> Option<String> {
    (id != NULL_SHA).then(|| id.to_owned())
}

/// Parses NUL-separated `--raw -z` entries.
fn parse_raw(body: &[u8], extensions: &[String]) -> Vec<FileChange> {
    let body = body.strip_prefix(b"\n").unwrap_or(body);
    let mut tokens = body
        .split(|&b| b == 0)
        .map(|t| String::from_utf8_lossy(t).into_owned());
    let mut changes = Vec::new();
    while let Some(meta) = tokens.next() {
        let Some(meta) = meta.strip_prefix(':') else {
            continue;
        };
        let parts: Vec<&str> = meta.split(' ').collect();
        let [old_mode, new_mode, old_id, new_id, status] = parts[..] else {
            continue;
        };
        let letter = status.chars().next().unwrap_or('X');
        let score = status.get(1..).and_then(|s| s.parse::<u8>().ok());
        let first = tokens.next().unwrap_or_default();
        let second = if matches!(letter, 'R' | 'C') {
            tokens.next()
        } else {
            None
        };
        if !is_regular_mode(old_mode) || !is_regular_mode(new_mode) {
            continue;
        }
        let change = match (letter, &second) {
            ('A', _) | ('C', _) => {
                let path = match letter {
                    'C' => second.clone().unwrap_or_else(|| first.clone()),
                    _ => first.clone(),
                };
                filter_source_files(&path, extensions).then(|| FileChange {
                    path_before: None,
                    path_after: Some(path),
                    kind: ChangeKind::Added,
                    similarity: None,
                    old_blob: None,
                    new_blob: blob(new_id),
                    old_content: None,
                    new_content: None,
                    hunks: Vec::new(),
                })
            }
            ('M', _) | ('T', _) => filter_source_files(&first, extensions).then(|| FileChange {
                path_before: Some(first.clone()),
                path_after: Some(first.clone()),
                kind: ChangeKind::Modified,
                similarity: None,
                old_blob: blob(old_id),
                new_blob: blob(new_id),
                old_content: None,
                new_content: None,
                hunks: Vec::new(),
            }),
            ('D', _) => filter_source_files(&first, extensions).then(|| FileChange {
                path_before: Some(first.clone()),
                path_after: None,
                kind: ChangeKind::Deleted,
                similarity: None,
                old_blob: blob(old_id),
                new_blob: None,
                old_content: None,
                new_content: None,
                hunks: Vec::new(),
            }),
            ('R', Some(to)) => {
                let keep_old = filter_source_files(&first, extensions);
                let keep_new = filter_source_files(&to, extensions);
                let (kind, before, after) = match (keep_old, keep_new) {
                    (true, true) => (ChangeKind::Renamed, Some(first.clone()), Some(to.clone())),
                    (false, true) => (ChangeKind::Added, None, Some(to.clone())),
                    (true, false) => (ChangeKind::Deleted, Some(first.clone()), None),
                    (false, false) => continue,
                };
                Some(FileChange {
                    old_blob: before.as_ref().and_then(|_| blob(old_id)),
                    new_blob: after.as_ref().and_then(|_| blob(new_id)),
                    similarity: (kind == ChangeKind::Renamed).then_some(score).flatten(),
                    path_before: before,
                    path_after: after,
                    kind,
                    old_content: None,
                    new_content: None,
                    hunks: Vec::new(),
                })
            }
            _ => None,
        };
        changes.extend(change);
    }
    changes
}

impl Iterator for CommitStream {
    type Item = Result<CommitRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let chunk = match self.next_chunk() {
                Ok(Some(chunk)) => chunk,
                Ok(None) => return None,
                Err(e) => return Some(Err(e)),
            };
            match self.parse_chunk(&chunk) {
                Ok(commit) if self.in_range(commit.timestamp) => return Some(Ok(commit)),
                Ok(_) => continue,
                Err(msg) => {
                    warn!("skipping corrupt commit: {msg}");
                    self.skipped += 1;
                    self.warnings
                        .push(Warning::new(WarningKind::CorruptCommit, msg));
                }
            }
        }
    }
}

impl Drop for CommitStream {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
