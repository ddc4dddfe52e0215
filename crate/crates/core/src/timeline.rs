//! Cumulative monthly classification of developers into generalists
//! (mandatory code only), specialists (variable code only) and mixed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::ContributionLedger;
use crate::month::YearMonth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeveloperCategory {
    Generalist,
    Specialist,
    Mixed,
}

/// Months in which a developer touched each kind of code, over all files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeveloperActivity {
    pub variable_months: BTreeSet<YearMonth>,
    pub mandatory_months: BTreeSet<YearMonth>,
}

impl DeveloperActivity {
    fn first_variable(&self) -> Option<YearMonth> {
        self.variable_months.first().copied()
    }

    fn first_mandatory(&self) -> Option<YearMonth> {
        self.mandatory_months.first().copied()
    }
}

/// Aggregates per-file touch months by developer. Developers whose changes
/// never touched a source line are absent.
pub fn developer_activity(ledger: &ContributionLedger) -> BTreeMap<String, DeveloperActivity> {
    let mut out: BTreeMap<String, DeveloperActivity> = BTreeMap::new();
    for file in ledger.files.values() {
        for (dev, stats) in &file.developers {
            if stats.variable_touch_months.is_empty() && stats.mandatory_touch_months.is_empty() {
                continue;
            }
            let entry = out.entry(dev.clone()).or_default();
            entry
                .variable_months
                .extend(stats.variable_touch_months.iter().copied());
            entry
                .mandatory_months
                .extend(stats.mandatory_touch_months.iter().copied());
        }
    }
    out
}

fn category(variable: bool, mandatory: bool) -> Option<DeveloperCategory> {
    match (variable, mandatory) {
        (true, true) => Some(DeveloperCategory::Mixed),
        (true, false) => Some(DeveloperCategory::Specialist),
        (false, true) => Some(DeveloperCategory::Generalist),
        (false, false) => None,
    }
}

/// Category of a developer considering only touches up to `as_of`
/// (inclusive), or the whole history.
pub fn classify_developer(
    developer: &str,
    activity: &DeveloperActivity,
    as_of: Option<YearMonth>,
) -> Result<DeveloperCategory> {
    let seen =
        |first: Option<YearMonth>| first.is_some_and(|m| as_of.map_or(true, |limit| m <= limit));
    category(
        seen(activity.first_variable()),
        seen(activity.first_mandatory()),
    )
    .ok_or_else(|| Error::NeverActive(developer.to_owned()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSnapshot {
    pub year_month: YearMonth,
    pub generalist: usize,
    pub specialist: usize,
    pub mixed: usize,
    pub total: usize,
}

impl TimelineSnapshot {
    pub fn count(&self, category: DeveloperCategory) -> usize {
        match category {
            DeveloperCategory::Generalist => self.generalist,
            DeveloperCategory::Specialist => self.specialist,
            DeveloperCategory::Mixed => self.mixed,
        }
    }
}

/// One snapshot per month from the first to the last commit month,
/// partitioning every developer active so far.
pub fn monthly_snapshots(ledger: &ContributionLedger) -> Vec<TimelineSnapshot> {
    let (Some(first), Some(last)) = (ledger.first_month, ledger.last_month) else {
        return Vec::new();
    };
    let firsts: Vec<(Option<YearMonth>, Option<YearMonth>)> = developer_activity(ledger)
        .values()
        .map(|a| (a.first_variable(), a.first_mandatory()))
        .collect();
    first
        .through(last)
        .map(|month| {
            let mut snap = TimelineSnapshot {
                year_month: month,
                generalist: 0,
                specialist: 0,
                mixed: 0,
                total: 0,
            };
            for &(v, m) in &firsts {
                let cat = category(v.is_some_and(|v| v <= month), m.is_some_and(|m| m <= month));
                match cat {
                    Some(DeveloperCategory::Generalist) => snap.generalist += 1,
                    Some(DeveloperCategory::Specialist) => snap.specialist += 1,
                    Some(DeveloperCategory::Mixed) => snap.mixed += 1,
                    None => continue,
                }
                snap.total += 1;
            }
            snap
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecializationSummary {
    pub generalist_pct: f64,
    pub specialist_pct: f64,
    pub mixed_pct: f64,
}

/// Percentages of the final snapshot; `None` without snapshots.
pub fn specialization_summary(snapshots: &[TimelineSnapshot]) -> Option<SpecializationSummary> {
    let last = snapshots.last()?;
    let pct = |n: usize| {
        if last.total == 0 {
            0.0
        } else {
            100.0 * n as f64 / last.total as f64
        }
    };
    Some(SpecializationSummary {
        generalist_pct: pct(last.generalist),
        specialist_pct: pct(last.specialist),
        mixed_pct: pct(last.mixed),
    })
}
