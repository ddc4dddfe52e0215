//! Random in-memory histories. The interpreter tracks file lineages on its
//! own, so it doubles as an oracle for first authorship and delivery counts.

use std::collections::{BTreeMap, HashMap};

use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;
use varexp::history::{resolve_identity, ChangeKind, CommitRecord, FileChange};

pub const TEMPLATES: &[&str] = &[
    "int a;\n",
    "int a;\n#ifdef FOO\nint b;\n#endif\n",
    "#ifdef FOO\nint b;\n#endif\n",
    "int a;\nint c;\n",
    "#if X > 1\nint d;\n#else\nint e;\n#endif\nint a;\n",
    "int a;\n#ifdef FOO\nint b2;\n#endif\nint z;\n",
    "",
];

#[derive(Debug, Clone)]
pub enum Action {
    Write(usize),
    Delete,
    RenameTo(usize),
}

#[derive(Debug, Clone)]
pub struct Op {
    pub dev: usize,
    pub advance_days: i64,
    pub slot: usize,
    pub action: Action,
}

pub fn op(devs: usize) -> impl Strategy<Value = Op> {
    (
        0..devs,
        prop_oneof![3 => 0..5i64, 2 => 5..70i64],
        0..4usize,
        prop_oneof![
            6 => (0..TEMPLATES.len()).prop_map(Action::Write),
            1 => Just(Action::Delete),
            1 => (0..4usize).prop_map(Action::RenameTo),
        ],
    )
        .prop_map(|(dev, advance_days, slot, action)| Op {
            dev,
            advance_days,
            slot,
            action,
        })
}

pub fn ops() -> impl Strategy<Value = Vec<Op>> {
    (1..=5usize).prop_flat_map(|devs| prop::collection::vec(op(devs), 1..30))
}

pub fn dev_key(d: usize) -> String {
    format!("dev{d}@example.org")
}

/// Expected per-lineage `(fa, dl)` by developer key.
pub type Deliveries = BTreeMap<u32, BTreeMap<String, (u8, u32)>>;

fn change(
    kind: ChangeKind,
    before: Option<String>,
    after: Option<String>,
    old: Option<&str>,
    new: Option<&str>,
) -> FileChange {
    let mut c = FileChange {
        path_before: before,
        path_after: after,
        kind,
        similarity: None,
        old_blob: None,
        new_blob: None,
        old_content: None,
        new_content: None,
        hunks: Vec::new(),
    };
    c.set_contents(old.map(str::to_owned), new.map(str::to_owned));
    c
}

/// Replays `ops` as one-change commits; ops that make no sense in the
/// current state (editing to identical content, deleting a missing file,
/// renaming onto an existing one) are dropped.
pub fn build_history(ops: &[Op]) -> (Vec<CommitRecord>, Deliveries) {
    let base = Utc.with_ymd_and_hms(2019, 12, 20, 12, 0, 0).unwrap();
    let mut now = base;
    let mut alive: HashMap<usize, (u32, &'static str)> = HashMap::new();
    let mut next_lineage = 0u32;
    let mut expected: Deliveries = BTreeMap::new();
    let mut commits = Vec::new();
    for (n, op) in ops.iter().enumerate() {
        now += Duration::days(op.advance_days);
        let path = |s: usize| format!("f{s}.c");
        let key = dev_key(op.dev);
        let (lineage, created, change) = match (&op.action, alive.get(&op.slot).copied()) {
            (Action::Write(t), None) => {
                let id = next_lineage;
                next_lineage += 1;
                alive.insert(op.slot, (id, TEMPLATES[*t]));
                (
                    id,
                    true,
                    change(
                        ChangeKind::Added,
                        None,
                        Some(path(op.slot)),
                        None,
                        Some(TEMPLATES[*t]),
                    ),
                )
            }
            (Action::Write(t), Some((id, old))) if old != TEMPLATES[*t] => {
                alive.insert(op.slot, (id, TEMPLATES[*t]));
                let c = change(
                    ChangeKind::Modified,
                    Some(path(op.slot)),
                    Some(path(op.slot)),
                    Some(old),
                    Some(TEMPLATES[*t]),
                );
                (id, false, c)
            }
            (Action::Delete, Some((id, old))) => {
                alive.remove(&op.slot);
                (
                    id,
                    false,
                    change(
                        ChangeKind::Deleted,
                        Some(path(op.slot)),
                        None,
                        Some(old),
                        None,
                    ),
                )
            }
            (Action::RenameTo(to), Some((id, old)))
                if *to != op.slot && !alive.contains_key(to) =>
            {
                alive.remove(&op.slot);
                alive.insert(*to, (id, old));
                let c = change(
                    ChangeKind::Renamed,
                    Some(path(op.slot)),
                    Some(path(*to)),
                    Some(old),
                    Some(old),
                );
                (id, false, c)
            }
            _ => continue,
        };
        let entry = expected
            .entry(lineage)
            .or_default()
            .entry(key)
            .or_insert((0, 0));
        if created {
            entry.0 = 1;
        }
        entry.1 += 1;
        commits.push(CommitRecord {
            commit_id: format!("{n:040x}"),
            author: resolve_identity(&format!("dev{}", op.dev), &dev_key(op.dev)).unwrap(),
            timestamp: now,
            is_merge: false,
            changes: vec![change],
        });
    }
    (commits, expected)
}
