//! Line-delimited JSON cache of classified changes, one record per
//! (commit, file). A cache file is keyed by the analyzed tip commit and the
//! hash of the mining settings, so any change to either starts afresh.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::ledger::ChangeRecord;

type Key = (String, Option<String>, Option<String>);

fn key_of(commit_id: &str, path_before: Option<&str>, path_after: Option<&str>) -> Key {
    (
        commit_id.to_owned(),
        path_before.map(str::to_owned),
        path_after.map(str::to_owned),
    )
}

#[derive(Debug, Default)]
pub struct ChangeCache {
    records: HashMap<Key, ChangeRecord>,
    hits: usize,
}

pub fn cache_path(dir: &Path, tip: &str, settings_hash: &str) -> PathBuf {
    dir.join(format!(
        "{tip}-{}.jsonl",
        &settings_hash[..16.min(settings_hash.len())]
    ))
}

impl ChangeCache {
    /// Loads a cache file. A missing file gives an empty cache; a corrupt
    /// one is discarded with a warning.
    pub fn load(path: &Path) -> Result<Self> {
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut records = HashMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ChangeRecord>(&line) {
                Ok(r) => {
                    let key = key_of(
                        &r.commit_id,
                        r.path_before.as_deref(),
                        r.path_after.as_deref(),
                    );
                    records.insert(key, r);
                }
                Err(e) => {
                    warn!(
                        "ignoring corrupt cache {} (line {}): {e}",
                        path.display(),
                        n + 1
                    );
                    return Ok(Self::default());
                }
            }
        }
        Ok(Self { records, hits: 0 })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(
        &mut self,
        commit_id: &str,
        path_before: Option<&str>,
        path_after: Option<&str>,
    ) -> Option<ChangeRecord> {
        let hit = self
            .records
            .get(&key_of(commit_id, path_before, path_after))
            .cloned();
        if hit.is_some() {
            self.hits += 1;
        }
        hit
    }

    pub fn hits(&self) -> usize {
        self.hits
    }
}

/// Writes records in order, replacing any previous file atomically.
pub fn write_records(path: &Path, records: &[ChangeRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut out = BufWriter::new(file);
        for r in records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
        }
        out.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
