//! Linear development history of a git repository.

mod diff;
mod git;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::{apply_hunks, compute_hunks, Hunk};
pub use git::{BlobReader, CommitStream, EnumerateOptions, GitRepo};

/// Extensions treated as C source when none are configured.
pub const DEFAULT_EXTENSIONS: [&str; 2] = ["c", "h"];

/// A developer, keyed by normalized email. Equality, ordering and hashing
/// only look at `canonical_key`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeveloperId {
    pub canonical_key: String,
    pub display_name: String,
    pub emails: BTreeSet<String>,
}

impl PartialEq for DeveloperId {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_key == other.canonical_key
    }
}

impl Eq for DeveloperId {}

impl Hash for DeveloperId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical_key.hash(state);
    }
}

impl PartialOrd for DeveloperId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DeveloperId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_key.cmp(&other.canonical_key)
    }
}

/// Exact, email-keyed identity resolution. No alias unification is
/// attempted: the same person committing from two addresses counts twice.
pub fn resolve_identity(name: &str, email: &str) -> Result<DeveloperId> {
    let name = name.trim();
    let email = email.trim().to_lowercase();
    let canonical_key = if !email.is_empty() {
        email.clone()
    } else if !name.is_empty() {
        name.to_lowercase()
    } else {
        return Err(Error::EmptyIdentity);
    };
    Ok(DeveloperId {
        canonical_key,
        display_name: if name.is_empty() {
            email.clone()
        } else {
            name.to_owned()
        },
        emails: (!email.is_empty()).then_some(email).into_iter().collect(),
    })
}

/// True iff `path` has an extension in `extensions` (compared
/// case-insensitively; entries may be given with or without the dot).
pub fn filter_source_files<S: AsRef<str>>(path: &str, extensions: &[S]) -> bool {
    let file = path.rsplit('/').next().unwrap_or(path);
    let Some((stem, ext)) = file.rsplit_once('.') else {
        return false;
    };
    if stem.is_empty() {
        // Dotfiles like `.h` have no extension.
        return false;
    }
    extensions
        .iter()
        .any(|e| e.as_ref().trim_start_matches('.').eq_ignore_ascii_case(ext))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
    Renamed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path_before: Option<String>,
    pub path_after: Option<String>,
    pub kind: ChangeKind,
    /// Rename similarity reported by git, in percent.
    pub similarity: Option<u8>,
    pub old_blob: Option<String>,
    pub new_blob: Option<String>,
    /// Contents and hunks are filled by [`FileChange::load`]; commit
    /// enumeration alone only knows paths and blob ids.
    pub old_content: Option<String>,
    pub new_content: Option<String>,
    pub hunks: Vec<Hunk>,
}

impl FileChange {
    /// The path identifying this change in reports: the new path, or the
    /// old one for deletions.
    pub fn path(&self) -> &str {
        self.path_after
            .as_deref()
            .or(self.path_before.as_deref())
            .unwrap_or_default()
    }

    /// Sets both contents and computes hunks.
    pub fn set_contents(&mut self, old: Option<String>, new: Option<String>) {
        self.hunks = compute_hunks(old.as_deref().unwrap_or(""), new.as_deref().unwrap_or(""));
        self.old_content = old;
        self.new_content = new;
    }

    pub fn is_loaded(&self) -> bool {
        self.old_content.is_some() || self.new_content.is_some()
    }

    /// Loads contents from the object store. Returns `Ok(false)` when
    /// either side is binary; contents are then left empty.
    pub fn load(&mut self, blobs: &mut BlobReader) -> Result<bool> {
        let old = match &self.old_blob {
            Some(id) => match crate::text::decode(&blobs.read(id)?) {
                Some(text) => Some(text),
                None => return Ok(false),
            },
            None => None,
        };
        let new = match &self.new_blob {
            Some(id) => match crate::text::decode(&blobs.read(id)?) {
                Some(text) => Some(text),
                None => return Ok(false),
            },
            None => None,
        };
        self.set_contents(old, new);
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    pub author: DeveloperId,
    pub timestamp: DateTime<Utc>,
    pub is_merge: bool,
    pub changes: Vec<FileChange>,
}
