//! Precision and recall of expertise-metric recommendations against the
//! developers who actually changed variable code in each file.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expertise::{recommended_sets, ExpertiseScore, Metric};
use crate::ledger::{ContributionLedger, FileHistory, LineageId};
use crate::par;

/// Developers with at least one change event on the file that touched
/// variable code.
pub fn variable_changers(id: LineageId, ledger: &ContributionLedger) -> Result<BTreeSet<String>> {
    let file = ledger
        .file(id)
        .ok_or_else(|| Error::NoVariableCode(format!("lineage {}", id.0)))?;
    if !file.has_variable_code_ever {
        return Err(Error::NoVariableCode(file.path().to_owned()));
    }
    Ok(changers_of(file))
}

fn changers_of(file: &FileHistory) -> BTreeSet<String> {
    file.developers
        .iter()
        .filter(|(_, s)| s.touched_variable())
        .map(|(d, _)| d.clone())
        .collect()
}

/// `(precision, recall)`; each is `None` when its denominator set is empty.
pub fn precision_recall<T: Ord>(
    recommended: &BTreeSet<T>,
    relevant: &BTreeSet<T>,
) -> (Option<f64>, Option<f64>) {
    let hits = recommended.intersection(relevant).count() as f64;
    let precision = (!recommended.is_empty()).then(|| hits / recommended.len() as f64);
    let recall = (!relevant.is_empty()).then(|| hits / relevant.len() as f64);
    (precision, recall)
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Pool (file, developer) pairs across files, then compute once.
    #[default]
    Micro,
    /// Mean of per-file values over files where each is defined.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub metric: Metric,
    pub aggregation: Aggregation,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Share of all developers recommended for at least one evaluated file.
    pub recommended_dev_pct: f64,
    pub files_evaluated: usize,
    pub pairs_recommended: usize,
    pub pairs_relevant: usize,
    pub pairs_hit: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Evaluates one metric over every file that ever contained variable code.
pub fn project_evaluation(
    ledger: &ContributionLedger,
    scores: &[ExpertiseScore],
    metric: Metric,
    aggregation: Aggregation,
) -> Result<EvaluationResult> {
    let recommended = recommended_sets(scores, metric);
    let eligible: Vec<LineageId> = ledger
        .files
        .iter()
        .filter(|(_, f)| f.has_variable_code_ever)
        .map(|(id, _)| *id)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleFiles(
            "no file ever contained variable code".into(),
        ));
    }

    let empty = BTreeSet::new();
    let per_file: Vec<(&BTreeSet<String>, BTreeSet<String>)> = par::map(&eligible, |id| {
        (
            recommended.get(id).unwrap_or(&empty),
            changers_of(&ledger.files[id]),
        )
    });

    let mut pairs_recommended = 0;
    let mut pairs_relevant = 0;
    let mut pairs_hit = 0;
    let mut per_file_pr = Vec::with_capacity(per_file.len());
    let mut recommended_devs: BTreeSet<&str> = BTreeSet::new();
    for (rec, rel) in &per_file {
        pairs_recommended += rec.len();
        pairs_relevant += rel.len();
        pairs_hit += rec.intersection(rel).count();
        recommended_devs.extend(rec.iter().map(String::as_str));
        per_file_pr.push(precision_recall(rec, rel));
    }

    let (precision, recall) = match aggregation {
        Aggregation::Micro => (
            (pairs_recommended > 0).then(|| pairs_hit as f64 / pairs_recommended as f64),
            (pairs_relevant > 0).then(|| pairs_hit as f64 / pairs_relevant as f64),
        ),
        Aggregation::Macro => (
            mean(per_file_pr.iter().filter_map(|p| p.0)),
            mean(per_file_pr.iter().filter_map(|p| p.1)),
        ),
    };

    let all_devs = ledger.developers.len();
    let recommended_dev_pct = if all_devs == 0 {
        0.0
    } else {
        100.0 * recommended_devs.len() as f64 / all_devs as f64
    };

    Ok(EvaluationResult {
        metric,
        aggregation,
        precision,
        recall,
        recommended_dev_pct,
        files_evaluated: eligible.len(),
        pairs_recommended,
        pairs_relevant,
        pairs_hit,
    })
}

/// Both metrics under one aggregation, in the order DOA, Ownership.
pub fn evaluate_all(
    ledger: &ContributionLedger,
    scores: &[ExpertiseScore],
    aggregation: Aggregation,
) -> Result<BTreeMap<Metric, EvaluationResult>> {
    [Metric::Doa, Metric::Ownership]
        .into_iter()
        .map(|m| project_evaluation(ledger, scores, m, aggregation).map(|r| (m, r)))
        .collect()
}
