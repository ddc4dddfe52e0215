//! Degree of Authorship and commit-based Ownership per (developer, file).
//!
//! Absolute DOA follows the linear model of Fritz et al.:
//!
//! ```text
//! DOA = 3.293 + 1.098 * FA + 0.164 * DL - 0.321 * ln(1 + AC)
//! ```
//!
//! and is normalized per file by its maximum. A developer with normalized
//! DOA >= 0.75 is an author of the file; a developer with >= 5% of the
//! file's commits is a major contributor. Both thresholds are inclusive.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{ContributionLedger, ContributionStats, FileHistory, LineageId};
use crate::par;

pub const DOA_INTERCEPT: f64 = 3.293;
pub const DOA_FA_WEIGHT: f64 = 1.098;
pub const DOA_DL_WEIGHT: f64 = 0.164;
pub const DOA_AC_WEIGHT: f64 = 0.321;

pub const DEFAULT_DOA_THRESHOLD: f64 = 0.75;
pub const DEFAULT_OWNERSHIP_THRESHOLD: f64 = 0.05;

// Slack for ratios that land on a threshold up to rounding.
const THRESHOLD_EPS: f64 = 1e-12;

pub fn doa_absolute(fa: u8, dl: u32, ac: u32) -> f64 {
    DOA_INTERCEPT + DOA_FA_WEIGHT * f64::from(fa) + DOA_DL_WEIGHT * f64::from(dl)
        - DOA_AC_WEIGHT * f64::from(ac).ln_1p()
}

/// Each developer's absolute DOA divided by the file maximum.
pub fn doa_normalized(
    file: &str,
    stats: &BTreeMap<String, ContributionStats>,
) -> Result<BTreeMap<String, f64>> {
    let absolute: BTreeMap<&String, f64> = stats
        .iter()
        .map(|(dev, s)| (dev, doa_absolute(s.fa, s.dl, s.ac)))
        .collect();
    let max = absolute.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateFile(file.to_owned()));
    }
    Ok(absolute
        .into_iter()
        .map(|(dev, doa)| (dev.clone(), doa / max))
        .collect())
}

/// Share of the file's commits made by each developer.
pub fn ownership(
    file: &str,
    stats: &BTreeMap<String, ContributionStats>,
) -> Result<BTreeMap<String, f64>> {
    let total: u32 = stats.values().map(|s| s.commit_count).sum();
    if total == 0 {
        return Err(Error::EmptyHistory(file.to_owned()));
    }
    Ok(stats
        .iter()
        .map(|(dev, s)| (dev.clone(), f64::from(s.commit_count) / f64::from(total)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub doa: f64,
    pub ownership: f64,
    /// Optional minimum absolute DOA for authorship; off by default.
    pub doa_abs_floor: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            doa: DEFAULT_DOA_THRESHOLD,
            ownership: DEFAULT_OWNERSHIP_THRESHOLD,
            doa_abs_floor: None,
        }
    }
}

impl Thresholds {
    pub fn is_author(&self, doa_abs: f64, doa_norm: f64) -> bool {
        doa_norm + THRESHOLD_EPS >= self.doa
            && self.doa_abs_floor.map_or(true, |floor| doa_abs >= floor)
    }

    pub fn is_major(&self, ownership: f64) -> bool {
        ownership + THRESHOLD_EPS >= self.ownership
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseScore {
    pub file: LineageId,
    pub path: String,
    pub developer: String,
    pub fa: u8,
    pub dl: u32,
    pub ac: u32,
    pub doa_abs: f64,
    pub doa_norm: f64,
    pub ownership: f64,
    pub is_author: bool,
    pub is_major: bool,
}

/// Scores for every developer of one file, ordered by developer key.
pub fn score_file(
    id: LineageId,
    file: &FileHistory,
    thresholds: &Thresholds,
) -> Result<Vec<ExpertiseScore>> {
    let norm = doa_normalized(file.path(), &file.developers)?;
    let owned = ownership(file.path(), &file.developers)?;
    Ok(file
        .developers
        .iter()
        .map(|(dev, s)| {
            let doa_abs = doa_absolute(s.fa, s.dl, s.ac);
            let doa_norm = norm[dev];
            let ownership = owned[dev];
            ExpertiseScore {
                file: id,
                path: file.path().to_owned(),
                developer: dev.clone(),
                fa: s.fa,
                dl: s.dl,
                ac: s.ac,
                doa_abs,
                doa_norm,
                ownership,
                is_author: thresholds.is_author(doa_abs, doa_norm),
                is_major: thresholds.is_major(ownership),
            }
        })
        .collect())
}

/// Scores over the whole ledger, ordered by (lineage, developer).
pub fn compute_scores(
    ledger: &ContributionLedger,
    thresholds: &Thresholds,
) -> Result<Vec<ExpertiseScore>> {
    let files: Vec<(&LineageId, &FileHistory)> = ledger.files.iter().collect();
    let per_file = par::map(&files, |(id, file)| score_file(**id, file, thresholds));
    let mut scores = Vec::new();
    for file in per_file {
        scores.extend(file?);
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Doa,
    Ownership,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Doa => "DOA",
            Metric::Ownership => "Ownership",
        }
    }

    pub fn recommends(self, score: &ExpertiseScore) -> bool {
        match self {
            Metric::Doa => score.is_author,
            Metric::Ownership => score.is_major,
        }
    }
}

/// Authors (DOA) or major contributors (Ownership) of every scored file.
/// Files with no recommended developer map to an empty set.
pub fn recommended_sets(
    scores: &[ExpertiseScore],
    metric: Metric,
) -> BTreeMap<LineageId, BTreeSet<String>> {
    let mut sets: BTreeMap<LineageId, BTreeSet<String>> = BTreeMap::new();
    for score in scores {
        let set = sets.entry(score.file).or_default();
        if metric.recommends(score) {
            set.insert(score.developer.clone());
        }
    }
    sets
}
