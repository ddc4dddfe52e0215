//! Project summary and the CSV, JSON and markdown renderings of every
//! artifact. Output depends only on its inputs, so repeated runs are
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{project_evaluation, Aggregation, EvaluationResult};
use crate::expertise::{compute_scores, ExpertiseScore, Metric, Thresholds};
use crate::timeline::{
    monthly_snapshots, specialization_summary, SpecializationSummary, TimelineSnapshot,
};
use crate::variability::VariabilityCount;

pub const TIMELINE_FILE: &str = "timeline.csv";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const REPORT_STEM: &str = "report";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub project: String,
    pub files: usize,
    pub variabilities: VariabilityCount,
    pub commits: usize,
    pub devs: usize,
    /// Generalist, specialist and mixed shares of the final snapshot.
    pub gsm_pct: Option<SpecializationSummary>,
    pub aggregation: Aggregation,
    pub doa_dev_pct: Option<f64>,
    pub doa_precision: Option<f64>,
    pub doa_recall: Option<f64>,
    pub ownership_dev_pct: Option<f64>,
    pub ownership_precision: Option<f64>,
    pub ownership_recall: Option<f64>,
}

/// Month series plus final percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Specialization {
    pub snapshots: Vec<TimelineSnapshot>,
    pub summary: Option<SpecializationSummary>,
}

pub fn specialization(analysis: &crate::pipeline::Analysis) -> Specialization {
    let snapshots = monthly_snapshots(&analysis.ledger);
    let summary = specialization_summary(&snapshots);
    Specialization { snapshots, summary }
}

/// Evaluation rows for the requested metrics. A macro request also
/// reports the micro values so the two can be compared.
pub fn evaluate(
    analysis: &crate::pipeline::Analysis,
    thresholds: &Thresholds,
    metrics: &[Metric],
    aggregation: Aggregation,
) -> Result<Vec<EvaluationResult>> {
    let scores = compute_scores(&analysis.ledger, thresholds)?;
    let aggregations: &[Aggregation] = match aggregation {
        Aggregation::Micro => &[Aggregation::Micro],
        Aggregation::Macro => &[Aggregation::Micro, Aggregation::Macro],
    };
    let mut rows = Vec::new();
    for &metric in metrics {
        for &agg in aggregations {
            rows.push(project_evaluation(&analysis.ledger, &scores, metric, agg)?);
        }
    }
    Ok(rows)
}

/// The report skeleton: everything except the evaluation columns.
pub fn report_skeleton(
    analysis: &crate::pipeline::Analysis,
    aggregation: Aggregation,
) -> ProjectReport {
    let spec = specialization(analysis);
    ProjectReport {
        project: analysis.project.clone(),
        files: analysis.files,
        variabilities: analysis.variabilities,
        commits: analysis.ledger.commits,
        devs: spec.snapshots.last().map_or(0, |s| s.total),
        gsm_pct: spec.summary,
        aggregation,
        doa_dev_pct: None,
        doa_precision: None,
        doa_recall: None,
        ownership_dev_pct: None,
        ownership_precision: None,
        ownership_recall: None,
    }
}

impl ProjectReport {
    /// Copies evaluation values matching the report's aggregation.
    pub fn fill(&mut self, results: &[EvaluationResult]) {
        for r in results.iter().filter(|r| r.aggregation == self.aggregation) {
            let (pct, p, rc) = match r.metric {
                Metric::Doa => (
                    &mut self.doa_dev_pct,
                    &mut self.doa_precision,
                    &mut self.doa_recall,
                ),
                Metric::Ownership => (
                    &mut self.ownership_dev_pct,
                    &mut self.ownership_precision,
                    &mut self.ownership_recall,
                ),
            };
            *pct = Some(r.recommended_dev_pct);
            *p = r.precision;
            *rc = r.recall;
        }
    }
}

/// Full report; evaluation columns stay empty when no file ever had
/// variable code.
pub fn project_report(
    analysis: &crate::pipeline::Analysis,
    thresholds: &Thresholds,
    aggregation: Aggregation,
) -> Result<ProjectReport> {
    let mut report = report_skeleton(analysis, aggregation);
    match evaluate(
        analysis,
        thresholds,
        &[Metric::Doa, Metric::Ownership],
        aggregation,
    ) {
        Ok(rows) => report.fill(&rows),
        Err(Error::NoEligibleFiles(why)) => log::warn!("evaluation skipped: {why}"),
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    lineage: u32,
    file: &'a str,
    developer: &'a str,
    fa: u8,
    dl: u32,
    ac: u32,
    doa_abs: f64,
    doa_norm: f64,
    ownership: f64,
    is_author: bool,
    is_major: bool,
}

pub fn scores_csv(scores: &[ExpertiseScore]) -> Result<Vec<u8>> {
    csv_bytes(scores.iter().map(|s| ScoreRow {
        lineage: s.file.0,
        file: &s.path,
        developer: &s.developer,
        fa: s.fa,
        dl: s.dl,
        ac: s.ac,
        doa_abs: s.doa_abs,
        doa_norm: s.doa_norm,
        ownership: s.ownership,
        is_author: s.is_author,
        is_major: s.is_major,
    }))
}

pub fn write_scores_csv(path: &Path, scores: &[ExpertiseScore]) -> Result<()> {
    write_file(path, &scores_csv(scores)?)
}

pub fn timeline_csv(snapshots: &[TimelineSnapshot]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        year_month: String,
        generalist: usize,
        specialist: usize,
        mixed: usize,
        total: usize,
    }
    csv_bytes(snapshots.iter().map(|s| Row {
        year_month: s.year_month.to_string(),
        generalist: s.generalist,
        specialist: s.specialist,
        mixed: s.mixed,
        total: s.total,
    }))
}

/// Long-form series (`year_month,category,count,pct`) for plotting tools.
pub fn plot_data_csv(snapshots: &[TimelineSnapshot]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        year_month: String,
        category: &'a str,
        count: usize,
        pct: f64,
    }
    let mut rows = Vec::with_capacity(snapshots.len() * 3);
    for s in snapshots {
        for (category, count) in [
            ("generalist", s.generalist),
            ("specialist", s.specialist),
            ("mixed", s.mixed),
        ] {
            let pct = if s.total == 0 {
                0.0
            } else {
                100.0 * count as f64 / s.total as f64
            };
            rows.push(Row {
                year_month: s.year_month.to_string(),
                category,
                count,
                pct,
            });
        }
    }
    csv_bytes(rows)
}

pub fn evaluation_csv(results: &[EvaluationResult]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        metric: &'static str,
        aggregation: Aggregation,
        dev_pct: f64,
        precision: Option<f64>,
        recall: Option<f64>,
        files_evaluated: usize,
        pairs_recommended: usize,
        pairs_relevant: usize,
        pairs_hit: usize,
    }
    csv_bytes(results.iter().map(|r| Row {
        metric: r.metric.label(),
        aggregation: r.aggregation,
        dev_pct: r.recommended_dev_pct,
        precision: r.precision,
        recall: r.recall,
        files_evaluated: r.files_evaluated,
        pairs_recommended: r.pairs_recommended,
        pairs_relevant: r.pairs_relevant,
        pairs_hit: r.pairs_hit,
    }))
}

pub fn report_csv(report: &ProjectReport) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        project: &'a str,
        files: usize,
        var_blocks: usize,
        var_macros: usize,
        commits: usize,
        devs: usize,
        generalist_pct: Option<f64>,
        specialist_pct: Option<f64>,
        mixed_pct: Option<f64>,
        aggregation: Aggregation,
        doa_dev_pct: Option<f64>,
        doa_precision: Option<f64>,
        doa_recall: Option<f64>,
        ownership_dev_pct: Option<f64>,
        ownership_precision: Option<f64>,
        ownership_recall: Option<f64>,
    }
    csv_bytes([Row {
        project: &report.project,
        files: report.files,
        var_blocks: report.variabilities.blocks,
        var_macros: report.variabilities.distinct_macros,
        commits: report.commits,
        devs: report.devs,
        generalist_pct: report.gsm_pct.map(|g| g.generalist_pct),
        specialist_pct: report.gsm_pct.map(|g| g.specialist_pct),
        mixed_pct: report.gsm_pct.map(|g| g.mixed_pct),
        aggregation: report.aggregation,
        doa_dev_pct: report.doa_dev_pct,
        doa_precision: report.doa_precision,
        doa_recall: report.doa_recall,
        ownership_dev_pct: report.ownership_dev_pct,
        ownership_precision: report.ownership_precision,
        ownership_recall: report.ownership_recall,
    }])
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.digits$}"))
}

/// One table row in the usual subject-systems layout: variability counts
/// distinct macros, percentages carry two decimals, precision and recall
/// two decimals.
pub fn report_markdown(report: &ProjectReport) -> String {
    let mut out = String::new();
    out.push_str(
        "| Project | # Files | # Var. | # Commits | # Devs | G / S / M (%) | DOA (% devs) | DOA P / R | Ownership (% devs) | Ownership P / R |\n",
    );
    out.push_str("|---|---:|---:|---:|---:|---|---:|---|---:|---|\n");
    let gsm = report.gsm_pct.map_or_else(
        || "-".to_owned(),
        |g| {
            format!(
                "{:.2} / {:.2} / {:.2}",
                g.generalist_pct, g.specialist_pct, g.mixed_pct
            )
        },
    );
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} | {} | {} | {} / {} | {} | {} / {} |",
        report.project,
        report.files,
        report.variabilities.distinct_macros,
        report.commits,
        report.devs,
        gsm,
        fixed(report.doa_dev_pct, 2),
        fixed(report.doa_precision, 2),
        fixed(report.doa_recall, 2),
        fixed(report.ownership_dev_pct, 2),
        fixed(report.ownership_precision, 2),
        fixed(report.ownership_recall, 2),
    );
    out
}

pub fn timeline_markdown(spec: &Specialization) -> String {
    let mut out = String::from(
        "| Month | Generalist | Specialist | Mixed | Total |\n|---|---:|---:|---:|---:|\n",
    );
    for s in &spec.snapshots {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            s.year_month, s.generalist, s.specialist, s.mixed, s.total
        );
    }
    if let Some(g) = spec.summary {
        let _ = writeln!(
            out,
            "\nFinal: {:.2}% generalist, {:.2}% specialist, {:.2}% mixed",
            g.generalist_pct, g.specialist_pct, g.mixed_pct
        );
    }
    out
}

pub fn evaluation_markdown(results: &[EvaluationResult]) -> String {
    let mut out = String::from("| Metric | Aggregation | % devs | Precision | Recall | Files |\n|---|---|---:|---:|---:|---:|\n");
    for r in results {
        let agg = match r.aggregation {
            Aggregation::Micro => "micro",
            Aggregation::Macro => "macro",
        };
        let _ = writeln!(
            out,
            "| {} | {agg} | {:.2} | {} | {} | {} |",
            r.metric.label(),
            r.recommended_dev_pct,
            fixed(r.precision, 2),
            fixed(r.recall, 2),
            r.files_evaluated
        );
    }
    out
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes `report.csv`, `report.md` and `report.json`.
pub fn write_report(out_dir: &Path, report: &ProjectReport) -> Result<()> {
    write_file(
        &out_dir.join(format!("{REPORT_STEM}.csv")),
        &report_csv(report)?,
    )?;
    write_file(
        &out_dir.join(format!("{REPORT_STEM}.md")),
        report_markdown(report).as_bytes(),
    )?;
    write_file(
        &out_dir.join(format!("{REPORT_STEM}.json")),
        &json_bytes(report)?,
    )
}

pub fn write_timeline(out_dir: &Path, snapshots: &[TimelineSnapshot]) -> Result<()> {
    write_file(&out_dir.join(TIMELINE_FILE), &timeline_csv(snapshots)?)
}

pub fn write_evaluation(out_dir: &Path, results: &[EvaluationResult]) -> Result<()> {
    write_file(&out_dir.join(EVALUATION_FILE), &evaluation_csv(results)?)
}
