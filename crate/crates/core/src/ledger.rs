//! Per (developer, file) accumulation of the statistics every downstream
//! metric needs.
//!
//! A "change event" is one commit touching a file. Files are tracked by
//! lineage, so a rename continues the history of the original path.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{ChangeKind, CommitRecord, DeveloperId, FileChange};
use crate::month::YearMonth;
use crate::text::split_lines;
use crate::variability::{analyze_source, AnalyzerOptions, LineAnnotation};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeClassification {
    pub touched_variable: bool,
    pub touched_mandatory: bool,
    /// Expressions of the conditional branches enclosing touched variable
    /// lines.
    pub impacted_expressions: BTreeSet<String>,
}

fn check_len(
    context: &str,
    content: Option<&str>,
    annotations: Option<&[LineAnnotation]>,
) -> Result<()> {
    let lines = content.map_or(0, |c| split_lines(c).len());
    let annotated = annotations.map_or(0, <[_]>::len);
    if content.is_some() && annotations.is_some() && lines != annotated {
        return Err(Error::AnnotationMismatch {
            context: context.to_owned(),
            annotations: annotated,
            lines,
        });
    }
    Ok(())
}

/// Maps the change's added lines onto `new` and deleted lines onto `old`.
/// Annotations are the ones of the change's own old and new contents;
/// a side without annotations contributes nothing.
pub fn classify_change(
    change: &FileChange,
    old: Option<&[LineAnnotation]>,
    new: Option<&[LineAnnotation]>,
) -> Result<ChangeClassification> {
    check_len(change.path(), change.old_content.as_deref(), old)?;
    check_len(change.path(), change.new_content.as_deref(), new)?;

    let mut result = ChangeClassification::default();
    let mut visit = |annotations: Option<&[LineAnnotation]>, line_no: usize| -> Result<()> {
        let Some(annotations) = annotations else {
            return Ok(());
        };
        let a = annotations
            .get(line_no - 1)
            .ok_or_else(|| Error::AnnotationMismatch {
                context: format!("{} line {line_no}", change.path()),
                annotations: annotations.len(),
                lines: line_no,
            })?;
        if a.is_variable() {
            result.touched_variable = true;
            result.impacted_expressions.extend(
                a.presence_condition
                    .frames()
                    .iter()
                    .map(|f| f.impacted_expression())
                    .filter(|e| !e.is_empty())
                    .map(str::to_owned),
            );
        } else {
            result.touched_mandatory = true;
        }
        Ok(())
    };
    for hunk in &change.hunks {
        for (line_no, _) in &hunk.deleted_lines {
            visit(old, *line_no)?;
        }
        for (line_no, _) in &hunk.added_lines {
            visit(new, *line_no)?;
        }
    }
    Ok(result)
}

/// One (commit, file) change reduced to what the ledger consumes. This is
/// also the on-disk cache record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub commit_id: String,
    pub timestamp: DateTime<Utc>,
    pub author_key: String,
    pub path_after: Option<String>,
    pub kind: ChangeKind,
    pub touched_variable: bool,
    pub touched_mandatory: bool,
    pub variability_expressions: BTreeSet<String>,
    pub path_before: Option<String>,
    /// The old or new content had at least one variable line.
    pub file_has_variable: bool,
}

impl ChangeRecord {
    pub fn new(
        commit: &CommitRecord,
        change: &FileChange,
        classification: ChangeClassification,
        file_has_variable: bool,
    ) -> Self {
        Self {
            commit_id: commit.commit_id.clone(),
            timestamp: commit.timestamp,
            author_key: commit.author.canonical_key.clone(),
            path_after: change.path_after.clone(),
            kind: change.kind,
            touched_variable: classification.touched_variable,
            touched_mandatory: classification.touched_mandatory,
            variability_expressions: classification.impacted_expressions,
            path_before: change.path_before.clone(),
            file_has_variable,
        }
    }
}

/// Annotates both sides of a loaded change and classifies it.
pub fn analyze_change(
    commit: &CommitRecord,
    change: &FileChange,
    options: &AnalyzerOptions,
) -> Result<ChangeRecord> {
    let old = change
        .old_content
        .as_deref()
        .map(|c| analyze_source(c, options));
    let new = change
        .new_content
        .as_deref()
        .map(|c| analyze_source(c, options));
    let classification = classify_change(
        change,
        old.as_ref().map(|a| a.annotations.as_slice()),
        new.as_ref().map(|a| a.annotations.as_slice()),
    )
    .map_err(|e| match e {
        Error::AnnotationMismatch {
            context,
            annotations,
            lines,
        } => Error::AnnotationMismatch {
            context: format!("commit {} {context}", commit.commit_id),
            annotations,
            lines,
        },
        other => other,
    })?;
    let has_variable = old.as_ref().is_some_and(|a| a.has_variable())
        || new.as_ref().is_some_and(|a| a.has_variable());
    Ok(ChangeRecord::new(
        commit,
        change,
        classification,
        has_variable,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineageId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionStats {
    /// First authorship: this developer created the file.
    pub fa: u8,
    /// Deliveries: this developer's change events on the file.
    pub dl: u32,
    /// Acceptances: change events on the file by everyone else.
    pub ac: u32,
    pub commit_count: u32,
    pub first_touch: DateTime<Utc>,
    pub variable_touch_months: BTreeSet<YearMonth>,
    pub mandatory_touch_months: BTreeSet<YearMonth>,
}

impl ContributionStats {
    fn new(at: DateTime<Utc>) -> Self {
        Self {
            fa: 0,
            dl: 0,
            ac: 0,
            commit_count: 0,
            first_touch: at,
            variable_touch_months: BTreeSet::new(),
            mandatory_touch_months: BTreeSet::new(),
        }
    }

    pub fn touched_variable(&self) -> bool {
        !self.variable_touch_months.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHistory {
    /// Every path the lineage has had, oldest first.
    pub paths: Vec<String>,
    pub alive: bool,
    pub developers: BTreeMap<String, ContributionStats>,
    pub total_commit_count: u32,
    pub has_variable_code_ever: bool,
}

impl FileHistory {
    /// Latest path of the lineage.
    pub fn path(&self) -> &str {
        self.paths.last().map(String::as_str).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionLedger {
    pub files: BTreeMap<LineageId, FileHistory>,
    /// Every author of at least one source-file change, by canonical key.
    pub developers: BTreeMap<String, DeveloperId>,
    /// Non-merge commits folded.
    pub commits: usize,
    pub merges: usize,
    pub first_month: Option<YearMonth>,
    pub last_month: Option<YearMonth>,
}

impl ContributionLedger {
    pub fn file(&self, id: LineageId) -> Option<&FileHistory> {
        self.files.get(&id)
    }
}

/// Sequential, commit-ordered fold producing a [`ContributionLedger`].
#[derive(Debug, Default)]
pub struct LedgerBuilder {
    ledger: ContributionLedger,
    alive: HashMap<String, LineageId>,
    next_id: u32,
    author: Option<DeveloperId>,
}

impl LedgerBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn new_lineage(&mut self, path: &str) -> LineageId {
        let id = LineageId(self.next_id);
        self.next_id += 1;
        self.ledger.files.insert(
            id,
            FileHistory {
                paths: vec![path.to_owned()],
                alive: true,
                developers: BTreeMap::new(),
                total_commit_count: 0,
                has_variable_code_ever: false,
            },
        );
        id
    }

    /// Registers a commit. Must be called before its change records are
    /// applied, in commit order.
    pub fn begin_commit(&mut self, commit: &CommitRecord) {
        if commit.is_merge {
            self.ledger.merges += 1;
            return;
        }
        self.ledger.commits += 1;
        let month = YearMonth::of(commit.timestamp);
        self.ledger.first_month = Some(self.ledger.first_month.map_or(month, |m| m.min(month)));
        self.ledger.last_month = Some(self.ledger.last_month.map_or(month, |m| m.max(month)));
        self.author = Some(commit.author.clone());
    }

    pub fn apply(&mut self, record: &ChangeRecord) {
        if !self.ledger.developers.contains_key(&record.author_key) {
            let id = match &self.author {
                Some(a) if a.canonical_key == record.author_key => a.clone(),
                _ => DeveloperId {
                    canonical_key: record.author_key.clone(),
                    display_name: record.author_key.clone(),
                    emails: BTreeSet::new(),
                },
            };
            self.ledger.developers.insert(record.author_key.clone(), id);
        }
        let before = record.path_before.as_deref();
        let after = record.path_after.as_deref();
        let (id, created) = match record.kind {
            ChangeKind::Added => {
                let path = after.unwrap_or_default();
                let id = self.new_lineage(path);
                self.alive.insert(path.to_owned(), id);
                (id, true)
            }
            ChangeKind::Modified => {
                let path = after.or(before).unwrap_or_default();
                let id = match self.alive.get(path) {
                    Some(&id) => id,
                    None => {
                        let id = self.new_lineage(path);
                        self.alive.insert(path.to_owned(), id);
                        id
                    }
                };
                (id, false)
            }
            ChangeKind::Renamed => {
                let from = before.unwrap_or_default();
                let to = after.unwrap_or_default();
                let id = match self.alive.remove(from) {
                    Some(id) => id,
                    None => self.new_lineage(from),
                };
                let file = self.ledger.files.get_mut(&id).expect("lineage exists");
                file.paths.push(to.to_owned());
                self.alive.insert(to.to_owned(), id);
                (id, false)
            }
            ChangeKind::Deleted => {
                let path = before.unwrap_or_default();
                let id = match self.alive.remove(path) {
                    Some(id) => id,
                    None => self.new_lineage(path),
                };
                self.ledger
                    .files
                    .get_mut(&id)
                    .expect("lineage exists")
                    .alive = false;
                (id, false)
            }
        };

        let file = self.ledger.files.get_mut(&id).expect("lineage exists");
        file.total_commit_count += 1;
        file.has_variable_code_ever |= record.file_has_variable;
        let stats = file
            .developers
            .entry(record.author_key.clone())
            .or_insert_with(|| ContributionStats::new(record.timestamp));
        if created {
            stats.fa = 1;
        }
        stats.dl += 1;
        stats.commit_count += 1;
        stats.first_touch = stats.first_touch.min(record.timestamp);
        let month = YearMonth::of(record.timestamp);
        if record.touched_variable {
            stats.variable_touch_months.insert(month);
        }
        if record.touched_mandatory {
            stats.mandatory_touch_months.insert(month);
        }
    }

    /// Completes the fold, deriving acceptances from delivery totals.
    pub fn finish(mut self) -> ContributionLedger {
        for file in self.ledger.files.values_mut() {
            let total: u32 = file.developers.values().map(|s| s.dl).sum();
            for stats in file.developers.values_mut() {
                stats.ac = total - stats.dl;
            }
        }
        self.ledger
    }
}

/// Folds loaded commits (contents populated, see [`FileChange::load`])
/// into a ledger, annotating both sides of every change.
pub fn build_contribution_ledger<I>(
    commits: I,
    options: &AnalyzerOptions,
) -> Result<ContributionLedger>
where
    I: IntoIterator<Item = CommitRecord>,
{
    let mut builder = LedgerBuilder::new();
    for commit in commits {
        builder.begin_commit(&commit);
        if commit.is_merge {
            continue;
        }
        for change in &commit.changes {
            let record = analyze_change(&commit, change, options)?;
            builder.apply(&record);
        }
    }
    Ok(builder.finish())
}
