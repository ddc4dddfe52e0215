//! Zero-context line hunks between two file versions.

use serde::{Deserialize, Serialize};
use similar::{Algorithm, DiffOp, TextDiffConfig};

use crate::text::split_lines;

/// A contiguous change. Line texts keep their terminators, so applying the
/// hunks to the old content reproduces the new content byte for byte.
///
/// Follows the unified-diff convention: a side with count 0 has its start
/// set to the line *before* the change (0 at the top of the file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub deleted_lines: Vec<(usize, String)>,
    pub added_lines: Vec<(usize, String)>,
}

/// Myers line diff of `old` against `new`.
pub fn compute_hunks(old: &str, new: &str) -> Vec<Hunk> {
    let old_lines = split_lines(old);
    let new_lines = split_lines(new);
    let diff = TextDiffConfig::default()
        .algorithm(Algorithm::Myers)
        .diff_slices(&old_lines, &new_lines);

    // Op indices reported after similar's cleanup pass are not always
    // consistent; only the tags and lengths are used, with local cursors.
    let mut hunks = Vec::new();
    let mut current: Option<Hunk> = None;
    let (mut old_at, mut new_at) = (0usize, 0usize);
    for op in diff.ops() {
        let old_len = op.old_range().len();
        let new_len = op.new_range().len();
        if matches!(op, DiffOp::Equal { .. }) {
            hunks.extend(current.take());
            old_at += old_len;
            new_at += new_len;
            continue;
        }
        let hunk = current.get_or_insert_with(|| Hunk {
            // Provisional 0-based starts, fixed up below.
            old_start: old_at,
            old_count: 0,
            new_start: new_at,
            new_count: 0,
            deleted_lines: Vec::new(),
            added_lines: Vec::new(),
        });
        hunk.deleted_lines
            .extend((old_at..old_at + old_len).map(|i| (i + 1, old_lines[i].to_owned())));
        hunk.added_lines
            .extend((new_at..new_at + new_len).map(|i| (i + 1, new_lines[i].to_owned())));
        old_at += old_len;
        new_at += new_len;
    }
    hunks.extend(current);
    for hunk in &mut hunks {
        hunk.old_count = hunk.deleted_lines.len();
        hunk.new_count = hunk.added_lines.len();
        if hunk.old_count > 0 {
            hunk.old_start += 1;
        }
        if hunk.new_count > 0 {
            hunk.new_start += 1;
        }
    }
    hunks
}

/// Applies hunks produced by [`compute_hunks`] to `old`.
pub fn apply_hunks(old: &str, hunks: &[Hunk]) -> String {
    let old_lines = split_lines(old);
    let mut out = String::with_capacity(old.len());
    let mut next = 0; // 0-based index of the next unconsumed old line
    for hunk in hunks {
        let copy_until = if hunk.old_count == 0 {
            hunk.old_start
        } else {
            hunk.old_start - 1
        };
        for line in &old_lines[next..copy_until] {
            out.push_str(line);
        }
        next = copy_until + hunk.old_count;
        for (_, text) in &hunk.added_lines {
            out.push_str(text);
        }
    }
    for line in &old_lines[next..] {
        out.push_str(line);
    }
    out
}
