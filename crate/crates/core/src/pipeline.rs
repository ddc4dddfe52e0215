//! End-to-end orchestration: mine the history, classify changes in
//! parallel, fold them in commit order, and persist the analysis that the
//! later commands read back.

use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::cache::{self, ChangeCache};
use crate::config::{MiningSettings, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::EvaluationResult;
use crate::expertise::{compute_scores, Metric};
use crate::history::{CommitRecord, FileChange, GitRepo};
use crate::ledger::{analyze_change, ChangeRecord, ContributionLedger, LedgerBuilder};
use crate::par;
use crate::report;
use crate::variability::{analyze_source, count_variabilities, extract_regions, VariabilityCount};
use crate::warnings::{self, Warning, WarningKind};

pub const ANALYSIS_FILE: &str = "analysis.json";
pub const SCORES_FILE: &str = "scores.csv";
pub const WARNINGS_FILE: &str = "warnings.jsonl";

/// Commits held in memory at once while classifying.
const BATCH: usize = 256;

/// Everything later commands need, persisted as `analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub project: String,
    /// Tip commit the history was walked from.
    pub head: Option<String>,
    pub settings: MiningSettings,
    /// Source files in the last analyzed commit.
    pub files: usize,
    pub variabilities: VariabilityCount,
    pub skipped_commits: usize,
    pub ledger: ContributionLedger,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub commits: usize,
    pub changes: usize,
    pub cache_hits: usize,
    /// File images run through the conditional annotator.
    pub annotations: usize,
}

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub analysis: Analysis,
    pub warnings: Vec<Warning>,
    pub stats: RunStats,
}

enum Slot {
    Cached(ChangeRecord),
    Pending(usize),
    Skipped,
}

fn project_name(path: &Path) -> String {
    fs::canonicalize(path)
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads both sides of a change. Binary or missing blobs skip the change
/// with a warning.
fn load_change(
    change: &mut FileChange,
    blobs: &mut crate::history::BlobReader,
    commit_id: &str,
    warnings: &mut Vec<Warning>,
) -> Result<bool> {
    match change.load(blobs) {
        Ok(true) => Ok(true),
        Ok(false) => {
            warnings.push(
                Warning::new(WarningKind::BinaryFile, "binary content skipped")
                    .at_commit(commit_id)
                    .at_path(change.path()),
            );
            Ok(false)
        }
        Err(Error::MissingObject(id)) => {
            warnings.push(
                Warning::new(WarningKind::MissingBlob, format!("blob {id} unavailable"))
                    .at_commit(commit_id)
                    .at_path(change.path()),
            );
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

struct Miner<'a> {
    config: &'a RunConfig,
    builder: LedgerBuilder,
    cache: ChangeCache,
    records: Vec<ChangeRecord>,
    warnings: Vec<Warning>,
    stats: RunStats,
}

impl Miner<'_> {
    fn process(
        &mut self,
        batch: &mut [CommitRecord],
        blobs: &mut crate::history::BlobReader,
    ) -> Result<()> {
        let mut slots: Vec<Vec<Slot>> = Vec::with_capacity(batch.len());
        let mut pending: Vec<(usize, usize)> = Vec::new();
        for (ci, commit) in batch.iter_mut().enumerate() {
            let mut row = Vec::with_capacity(commit.changes.len());
            for (xi, change) in commit.changes.iter_mut().enumerate() {
                self.stats.changes += 1;
                let cached = self.cache.get(
                    &commit.commit_id,
                    change.path_before.as_deref(),
                    change.path_after.as_deref(),
                );
                row.push(match cached {
                    Some(record) => Slot::Cached(record),
                    None if load_change(change, blobs, &commit.commit_id, &mut self.warnings)? => {
                        pending.push((ci, xi));
                        Slot::Pending(pending.len() - 1)
                    }
                    None => Slot::Skipped,
                });
            }
            slots.push(row);
        }

        let options = self.config.analyzer_options();
        let batch_ref: &[CommitRecord] = batch;
        let analyzed = par::map(&pending, |&(ci, xi)| {
            let commit = &batch_ref[ci];
            analyze_change(commit, &commit.changes[xi], &options)
        });
        self.stats.annotations += pending
            .iter()
            .map(|&(ci, xi)| {
                let c = &batch_ref[ci].changes[xi];
                usize::from(c.old_content.is_some()) + usize::from(c.new_content.is_some())
            })
            .sum::<usize>();
        let mut analyzed: Vec<Option<Result<ChangeRecord>>> =
            analyzed.into_iter().map(Some).collect();

        for (commit, row) in batch.iter().zip(slots) {
            self.builder.begin_commit(commit);
            for slot in row {
                let record = match slot {
                    Slot::Cached(r) => r,
                    Slot::Pending(i) => analyzed[i].take().expect("each result used once")?,
                    Slot::Skipped => continue,
                };
                self.builder.apply(&record);
                self.records.push(record);
            }
        }
        Ok(())
    }
}

/// Source-file count, variability count and directive warnings of the
/// tree at `commit`.
fn snapshot(
    repo: &GitRepo,
    commit: &str,
    config: &RunConfig,
    blobs: &mut crate::history::BlobReader,
    warnings: &mut Vec<Warning>,
    stats: &mut RunStats,
) -> Result<(usize, VariabilityCount)> {
    let extensions = config.enumerate_options().extensions;
    let tree = repo.list_tree(commit, &extensions)?;
    let mut texts = Vec::with_capacity(tree.len());
    for (path, id) in &tree {
        match blobs.read(id) {
            Ok(bytes) => match crate::text::decode(&bytes) {
                Some(text) => texts.push((path.as_str(), text)),
                None => warnings.push(
                    Warning::new(WarningKind::BinaryFile, "binary content skipped")
                        .at_commit(commit)
                        .at_path(path),
                ),
            },
            Err(Error::MissingObject(id)) => warnings.push(
                Warning::new(WarningKind::MissingBlob, format!("blob {id} unavailable"))
                    .at_commit(commit)
                    .at_path(path),
            ),
            Err(e) => return Err(e),
        }
    }
    let options = config.analyzer_options();
    let analyzed = par::map(&texts, |(_, text)| {
        let analysis = analyze_source(text, &options);
        (extract_regions(&analysis.annotations), analysis.warnings)
    });
    stats.annotations += texts.len();
    for ((path, _), (_, file_warnings)) in texts.iter().zip(&analyzed) {
        for w in file_warnings {
            warnings.push(
                Warning::new(WarningKind::UnbalancedDirective, w.to_string())
                    .at_commit(commit)
                    .at_path(path)
                    .at_line(w.line),
            );
        }
    }
    let count = count_variabilities(analyzed.iter().map(|(regions, _)| regions.as_slice()));
    Ok((tree.len(), count))
}

/// Mines and classifies the history without writing artifacts (the cache
/// excepted).
pub fn mine(config: &RunConfig) -> Result<AnalyzeOutcome> {
    config.validate()?;
    let repo = GitRepo::open(&config.repo_path)?;
    let head = repo.tip(config.branch.as_deref())?;
    let settings = config.mining_settings();

    let cache_file = match (&config.cache_dir, &head) {
        (Some(dir), Some(tip)) => Some(cache::cache_path(dir, tip, &settings.hash())),
        _ => None,
    };
    let cache = match &cache_file {
        Some(path) => ChangeCache::load(path)?,
        None => ChangeCache::default(),
    };
    if !cache.is_empty() {
        info!("loaded {} cached change records", cache.len());
    }

    let mut miner = Miner {
        config,
        builder: LedgerBuilder::new(),
        cache,
        records: Vec::new(),
        warnings: Vec::new(),
        stats: RunStats::default(),
    };
    let mut stream = repo.enumerate_commits(&config.enumerate_options())?;
    let mut blobs = repo.blobs()?;
    let mut last_commit: Option<String> = None;
    let mut batch = Vec::with_capacity(BATCH);
    let mut exhausted = false;
    while !exhausted {
        match stream.next().transpose()? {
            Some(commit) => {
                miner.stats.commits += 1;
                last_commit = Some(commit.commit_id.clone());
                batch.push(commit);
                if batch.len() < BATCH {
                    continue;
                }
            }
            None => exhausted = true,
        }
        if !batch.is_empty() {
            miner.process(&mut batch, &mut blobs)?;
            debug!("folded {} commits", miner.stats.commits);
            batch.clear();
        }
    }
    let skipped_commits = stream.skipped();
    let mut warnings = stream.take_warnings();
    warnings.append(&mut miner.warnings);

    let ledger = miner.builder.finish();
    if ledger.files.is_empty() {
        return Err(Error::NoEligibleFiles(format!(
            "no changes to files with extensions {:?} in range",
            settings.extensions
        )));
    }
    let mut stats = miner.stats;
    stats.cache_hits = miner.cache.hits();
    let (files, variabilities) = match &last_commit {
        Some(commit) => snapshot(&repo, commit, config, &mut blobs, &mut warnings, &mut stats)?,
        None => (0, VariabilityCount::default()),
    };

    if let Some(path) = &cache_file {
        if stats.cache_hits < miner.records.len() || !path.exists() {
            cache::write_records(path, &miner.records)?;
        }
    }

    Ok(AnalyzeOutcome {
        analysis: Analysis {
            project: project_name(&config.repo_path),
            head,
            settings,
            files,
            variabilities,
            skipped_commits,
            ledger,
        },
        warnings,
        stats,
    })
}

/// Mines the repository and writes `analysis.json`, `scores.csv` and
/// `warnings.jsonl` into the output directory.
pub fn run_analyze(config: &RunConfig) -> Result<AnalyzeOutcome> {
    par::with_jobs(config.jobs, || {
        let outcome = mine(config)?;
        let out = &config.out_dir;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        save_analysis(out, &outcome.analysis)?;
        let scores = compute_scores(&outcome.analysis.ledger, &config.thresholds)?;
        report::write_scores_csv(&out.join(SCORES_FILE), &scores)?;
        warnings::write_jsonl(&out.join(WARNINGS_FILE), &outcome.warnings)?;
        info!(
            "analyzed {} commits, {} changes ({} cached, {} annotations)",
            outcome.stats.commits,
            outcome.stats.changes,
            outcome.stats.cache_hits,
            outcome.stats.annotations
        );
        Ok(outcome)
    })
}

pub fn analysis_path(out_dir: &Path) -> PathBuf {
    out_dir.join(ANALYSIS_FILE)
}

pub fn save_analysis(out_dir: &Path, analysis: &Analysis) -> Result<()> {
    let path = analysis_path(out_dir);
    let mut json = serde_json::to_vec_pretty(analysis)?;
    json.push(b'\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Reads the analysis written by a previous `analyze` run.
pub fn load_analysis(out_dir: &Path) -> Result<Analysis> {
    let path = analysis_path(out_dir);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingAnalysis(path))
        }
        Err(e) => return Err(Error::io(&path, e)),
    };
    Ok(serde_json::from_str(&text)?)
}

/// Monthly series from a saved analysis; writes `timeline.csv`.
pub fn run_specialization(config: &RunConfig) -> Result<report::Specialization> {
    let analysis = load_analysis(&config.out_dir)?;
    let spec = report::specialization(&analysis);
    report::write_timeline(&config.out_dir, &spec.snapshots)?;
    Ok(spec)
}

/// Evaluates the given metrics on a saved analysis; writes
/// `evaluation.csv`.
pub fn run_evaluate(config: &RunConfig, metrics: &[Metric]) -> Result<Vec<EvaluationResult>> {
    config.validate()?;
    let analysis = load_analysis(&config.out_dir)?;
    let rows = par::with_jobs(config.jobs, || {
        report::evaluate(&analysis, &config.thresholds, metrics, config.aggregation)
    })?;
    report::write_evaluation(&config.out_dir, &rows)?;
    Ok(rows)
}

/// Full project report from a saved analysis; writes `report.csv`,
/// `report.md` and `report.json`.
pub fn run_report(config: &RunConfig) -> Result<report::ProjectReport> {
    config.validate()?;
    let analysis = load_analysis(&config.out_dir)?;
    let report = par::with_jobs(config.jobs, || {
        report::project_report(&analysis, &config.thresholds, config.aggregation)
    })?;
    report::write_report(&config.out_dir, &report)?;
    Ok(report)
}
