//! Scripted micro-repositories with expected values worked out by hand
//! from the commit scripts. DOA literals are rounded to four decimals;
//! the exact reals come from `hand_doa`.

use std::fmt::Write as _;

use varexp::evaluation::{Aggregation, EvaluationResult};
use varexp::expertise::Metric;
use varexp::pipeline::{self, AnalyzeOutcome};
use varexp::report::{self, ProjectReport};
use varexp::RunConfig;

use super::FixtureRepo;

pub struct DevExpect {
    pub key: &'static str,
    pub fa: u8,
    pub dl: u32,
    pub ac: u32,
    /// Rounded to four decimals.
    pub doa_abs: f64,
    pub ownership: f64,
    pub is_author: bool,
}

pub struct FileExpect {
    pub path: &'static str,
    pub has_variable: bool,
    pub devs: Vec<DevExpect>,
}

#[derive(Clone, Copy)]
pub struct EvalExpect {
    pub precision: f64,
    pub recall: f64,
    pub dev_pct: f64,
}

pub struct Expect {
    pub files: usize,
    pub blocks: usize,
    pub macros: usize,
    pub commits: usize,
    pub devs: usize,
    pub gsm: (f64, f64, f64),
    pub lineages: Vec<FileExpect>,
    /// (month, generalist, specialist, mixed)
    pub timeline: Vec<(&'static str, usize, usize, usize)>,
    pub doa: EvalExpect,
    pub ownership: EvalExpect,
    pub doa_macro: Option<(f64, f64)>,
    pub ownership_macro: Option<(f64, f64)>,
}

pub struct Fixture {
    pub name: &'static str,
    pub build: fn() -> FixtureRepo,
    pub expect: fn() -> Expect,
}

/// The DOA model evaluated by hand, independent of the library.
pub fn hand_doa(fa: u8, dl: u32, ac: u32) -> f64 {
    3.293 + 1.098 * f64::from(fa) + 0.164 * f64::from(dl) - 0.321 * (1.0 + f64::from(ac)).ln()
}

fn dev(
    key: &'static str,
    fa: u8,
    dl: u32,
    ac: u32,
    doa_abs: f64,
    ownership: f64,
    is_author: bool,
) -> DevExpect {
    DevExpect {
        key,
        fa,
        dl,
        ac,
        doa_abs,
        ownership,
        is_author,
    }
}

fn ev(precision: f64, recall: f64, dev_pct: f64) -> EvalExpect {
    EvalExpect {
        precision,
        recall,
        dev_pct,
    }
}

// --- basic: one file, an #ifdef edit by a second developer ----------

fn build_basic() -> FixtureRepo {
    let r = FixtureRepo::new();
    r.write("core.c", "int a;\n#ifdef FOO\nint b;\n#endif\n")
        .commit("alice", "2020-01-10");
    r.write("core.c", "int a;\n#ifdef FOO\nint b2;\n#endif\n")
        .commit("bob", "2020-02-10");
    r.write("core.c", "int a;\n#ifdef FOO\nint b2;\n#endif\nint c;\n")
        .commit("alice", "2020-03-10");
    r
}

fn expect_basic() -> Expect {
    Expect {
        files: 1,
        blocks: 1,
        macros: 1,
        commits: 3,
        devs: 2,
        gsm: (0.0, 50.0, 50.0),
        lineages: vec![FileExpect {
            path: "core.c",
            has_variable: true,
            devs: vec![
                dev("alice@example.org", 1, 2, 1, 4.4965, 2.0 / 3.0, true),
                dev("bob@example.org", 0, 1, 2, 3.1043, 1.0 / 3.0, false),
            ],
        }],
        timeline: vec![
            ("2020-01", 0, 0, 1),
            ("2020-02", 0, 1, 1),
            ("2020-03", 0, 1, 1),
        ],
        doa: ev(1.0, 0.5, 50.0),
        ownership: ev(1.0, 1.0, 100.0),
        doa_macro: None,
        ownership_macro: None,
    }
}

// --- rename: rename with an edit, else branch, guarded header --------

const A_C: &str =
    "int x;\n#if defined(BAR)\nint y;\n#else\nint z;\n#endif\nint w;\nint v;\nint u;\n";

fn build_rename() -> FixtureRepo {
    let r = FixtureRepo::new();
    r.write("a.c", A_C).commit("alice", "2021-01-05");
    r.rename("a.c", "b.c");
    r.write("b.c", &A_C.replace("int u;", "int u2;"))
        .commit("bob", "2021-01-20");
    r.write(
        "b.c",
        &A_C.replace("int u;", "int u2;")
            .replace("int z;", "int z2;"),
    )
    .commit("carol", "2021-03-02");
    r.write(
        "util.h",
        "#ifndef UTIL_H\n#define UTIL_H\nint util(void);\n#endif\n",
    )
    .commit("bob", "2021-03-15");
    r.write(
        "util.h",
        "#ifndef UTIL_H\n#define UTIL_H\nint util(void);\n#ifdef BAR\nint extra;\n#endif\n#endif\n",
    )
    .commit("alice", "2021-04-01");
    r
}

fn expect_rename() -> Expect {
    Expect {
        files: 2,
        blocks: 2,
        macros: 1,
        commits: 5,
        devs: 3,
        gsm: (100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0),
        lineages: vec![
            FileExpect {
                path: "b.c",
                has_variable: true,
                devs: vec![
                    dev("alice@example.org", 1, 1, 2, 4.2023, 1.0 / 3.0, true),
                    dev("bob@example.org", 0, 1, 2, 3.1043, 1.0 / 3.0, false),
                    dev("carol@example.org", 0, 1, 2, 3.1043, 1.0 / 3.0, false),
                ],
            },
            FileExpect {
                path: "util.h",
                has_variable: true,
                devs: vec![
                    dev("alice@example.org", 0, 1, 1, 3.2345, 0.5, false),
                    dev("bob@example.org", 1, 1, 1, 4.3325, 0.5, true),
                ],
            },
        ],
        timeline: vec![
            ("2021-01", 1, 0, 1),
            ("2021-02", 1, 0, 1),
            ("2021-03", 1, 1, 1),
            ("2021-04", 1, 1, 1),
        ],
        doa: ev(0.5, 1.0 / 3.0, 200.0 / 3.0),
        ownership: ev(3.0 / 5.0, 1.0, 100.0),
        doa_macro: None,
        ownership_macro: None,
    }
}

// --- deletion: a change that only removes an #ifdef block ------------

fn build_deletion() -> FixtureRepo {
    let r = FixtureRepo::new();
    r.write("m.c", "int a;\n#ifdef DEBUG\nlog();\n#endif\nint b;\n")
        .commit("dana", "2022-05-01");
    r.write("m.c", "int a;\nint b;\n")
        .commit("erin", "2022-05-20");
    r.write("m.c", "int a;\nint b2;\n")
        .commit("dana", "2022-06-03");
    r.write("n.c", "int n;\n").commit("erin", "2022-07-11");
    r
}

fn expect_deletion() -> Expect {
    Expect {
        files: 2,
        blocks: 0,
        macros: 0,
        commits: 4,
        devs: 2,
        gsm: (0.0, 0.0, 100.0),
        lineages: vec![
            FileExpect {
                path: "m.c",
                has_variable: true,
                devs: vec![
                    dev("dana@example.org", 1, 2, 1, 4.4965, 2.0 / 3.0, true),
                    dev("erin@example.org", 0, 1, 2, 3.1043, 1.0 / 3.0, false),
                ],
            },
            FileExpect {
                path: "n.c",
                has_variable: false,
                devs: vec![dev("erin@example.org", 1, 1, 0, 4.555, 1.0, true)],
            },
        ],
        timeline: vec![
            ("2022-05", 0, 1, 1),
            ("2022-06", 0, 1, 1),
            ("2022-07", 0, 0, 2),
        ],
        doa: ev(1.0, 0.5, 50.0),
        ownership: ev(1.0, 1.0, 100.0),
        doa_macro: None,
        ownership_macro: None,
    }
}

// --- team: five developers, a merged side branch, macro averages -----

fn build_team() -> FixtureRepo {
    let r = FixtureRepo::new();
    r.write("p.c", "int p;\n#ifdef A\nint pa;\n#endif\n")
        .commit("fay", "2019-01-10");
    r.write("q.c", "int q1;\nint q2;\n")
        .commit("gus", "2019-01-25");
    r.write("p.c", "int p;\n#ifdef A\nint pa2;\n#endif\n")
        .commit("hal", "2019-02-14");
    r.write("q.c", "int q1;\nint q2;\n#if B > 1\nint qb;\n#endif\n")
        .commit("ivy", "2019-03-03");
    r.write("p.c", "int p2;\n#ifdef A\nint pa2;\n#endif\n")
        .commit("gus", "2019-03-20");
    r.branch("side");
    r.write("q.c", "int q1x;\nint q2;\n#if B > 1\nint qb;\n#endif\n")
        .commit("jo", "2019-05-08");
    r.checkout("main");
    r.merge("side", "gus", "2019-05-09");
    r.write("q.c", "int q1x;\nint q2;\n#if B > 1\nint qb2;\n#endif\n")
        .commit("hal", "2019-06-30");
    r.write("q.c", "int q1x;\nint q2b;\n#if B > 1\nint qb2;\n#endif\n")
        .commit("ivy", "2019-07-04");
    r
}

fn expect_team() -> Expect {
    Expect {
        files: 2,
        blocks: 2,
        macros: 2,
        commits: 8,
        devs: 5,
        gsm: (40.0, 20.0, 40.0),
        lineages: vec![
            FileExpect {
                path: "p.c",
                has_variable: true,
                devs: vec![
                    dev("fay@example.org", 1, 1, 2, 4.2023, 1.0 / 3.0, true),
                    dev("gus@example.org", 0, 1, 2, 3.1043, 1.0 / 3.0, false),
                    dev("hal@example.org", 0, 1, 2, 3.1043, 1.0 / 3.0, false),
                ],
            },
            FileExpect {
                path: "q.c",
                has_variable: true,
                devs: vec![
                    dev("gus@example.org", 1, 1, 4, 4.0384, 0.2, true),
                    dev("hal@example.org", 0, 1, 4, 2.9404, 0.2, false),
                    dev("ivy@example.org", 0, 2, 3, 3.1760, 0.4, true),
                    dev("jo@example.org", 0, 1, 4, 2.9404, 0.2, false),
                ],
            },
        ],
        timeline: vec![
            ("2019-01", 1, 0, 1),
            ("2019-02", 1, 1, 1),
            ("2019-03", 1, 2, 1),
            ("2019-04", 1, 2, 1),
            ("2019-05", 2, 2, 1),
            ("2019-06", 2, 2, 1),
            ("2019-07", 2, 1, 2),
        ],
        doa: ev(2.0 / 3.0, 0.5, 60.0),
        ownership: ev(4.0 / 7.0, 1.0, 100.0),
        doa_macro: Some((0.75, 0.5)),
        ownership_macro: Some((7.0 / 12.0, 1.0)),
    }
}

// --- guarded: nested conditions in a guarded header, one identity ----

const CFG_H: &str =
    "#ifndef CFG_H\n#define CFG_H\n#ifdef USE_X\n#if X_LEVEL > 2\nint deep;\n#endif\n#endif\nint g;\n#endif\n";

fn build_guarded() -> FixtureRepo {
    let r = FixtureRepo::new();
    r.write("cfg.h", CFG_H)
        .write("README.md", "cfg\n")
        .commit("kim", "2023-01-09");
    r.write("cfg.h", &CFG_H.replace("deep;", "deep2;"))
        .commit_as("Lee", "lee@example.org", "2023-02-02");
    r.write("README.md", "cfg docs\n")
        .commit_as("Lee Smith", "Lee@Example.org", "2023-02-20");
    r.write(
        "cfg.h",
        &CFG_H
            .replace("deep;", "deep2;")
            .replace("int g;", "int g2;"),
    )
    .commit("kim", "2023-03-01");
    r.write(
        "cfg.h",
        &CFG_H
            .replace("deep;", "deep2;")
            .replace("int g;", "int g3;"),
    )
    .commit_as("LEE", " lee@example.org", "2023-03-15");
    r
}

fn expect_guarded() -> Expect {
    Expect {
        files: 1,
        blocks: 2,
        macros: 2,
        commits: 5,
        devs: 2,
        gsm: (0.0, 0.0, 100.0),
        lineages: vec![FileExpect {
            path: "cfg.h",
            has_variable: true,
            devs: vec![
                dev("kim@example.org", 1, 2, 2, 4.3663, 0.5, true),
                dev("lee@example.org", 0, 2, 2, 3.2683, 0.5, false),
            ],
        }],
        timeline: vec![
            ("2023-01", 0, 0, 1),
            ("2023-02", 0, 1, 1),
            ("2023-03", 0, 0, 2),
        ],
        doa: ev(1.0, 0.5, 50.0),
        ownership: ev(1.0, 1.0, 100.0),
        doa_macro: None,
        ownership_macro: None,
    }
}

pub fn all() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "basic",
            build: build_basic,
            expect: expect_basic,
        },
        Fixture {
            name: "rename",
            build: build_rename,
            expect: expect_rename,
        },
        Fixture {
            name: "deletion",
            build: build_deletion,
            expect: expect_deletion,
        },
        Fixture {
            name: "team",
            build: build_team,
            expect: expect_team,
        },
        Fixture {
            name: "guarded",
            build: build_guarded,
            expect: expect_guarded,
        },
    ]
}

const EPS: f64 = 1e-9;

fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps
}

pub struct Checked {
    pub outcome: AnalyzeOutcome,
    pub report: ProjectReport,
}

/// Runs the library pipeline on a built fixture and compares everything
/// against the expectation. Returns the list of mismatches.
pub fn check(
    repo: &FixtureRepo,
    expect: &Expect,
    out: &std::path::Path,
) -> Result<Checked, String> {
    let mut config = RunConfig::new(repo.path(), out);
    let mut errs = String::new();
    let outcome = pipeline::run_analyze(&config).map_err(|e| e.to_string())?;
    let analysis = &outcome.analysis;
    let ledger = &analysis.ledger;

    for fe in &expect.lineages {
        let Some((id, file)) = ledger
            .files
            .iter()
            .find(|(_, f)| f.path() == fe.path && f.alive)
        else {
            let _ = writeln!(errs, "no live lineage for {}", fe.path);
            continue;
        };
        if file.has_variable_code_ever != fe.has_variable {
            let _ = writeln!(
                errs,
                "{}: has_variable {}",
                fe.path, file.has_variable_code_ever
            );
        }
        let got: Vec<(&str, u8, u32, u32)> = file
            .developers
            .iter()
            .map(|(d, s)| (d.as_str(), s.fa, s.dl, s.ac))
            .collect();
        let want: Vec<(&str, u8, u32, u32)> =
            fe.devs.iter().map(|d| (d.key, d.fa, d.dl, d.ac)).collect();
        if got != want {
            let _ = writeln!(errs, "{}: ledger {got:?} != {want:?}", fe.path);
            continue;
        }
        let scores = varexp::expertise::score_file(*id, file, &config.thresholds)
            .map_err(|e| e.to_string())?;
        let max = fe
            .devs
            .iter()
            .map(|d| hand_doa(d.fa, d.dl, d.ac))
            .fold(f64::MIN, f64::max);
        for (s, d) in scores.iter().zip(&fe.devs) {
            let exact = hand_doa(d.fa, d.dl, d.ac);
            if !close(s.doa_abs, d.doa_abs, 5e-5) || !close(s.doa_abs, exact, EPS) {
                let _ = writeln!(
                    errs,
                    "{} {}: doa_abs {} (want {} ~ {})",
                    fe.path, d.key, s.doa_abs, exact, d.doa_abs
                );
            }
            if !close(s.doa_norm, exact / max, EPS) {
                let _ = writeln!(
                    errs,
                    "{} {}: doa_norm {} (want {})",
                    fe.path,
                    d.key,
                    s.doa_norm,
                    exact / max
                );
            }
            if !close(s.ownership, d.ownership, EPS) {
                let _ = writeln!(
                    errs,
                    "{} {}: ownership {} (want {})",
                    fe.path, d.key, s.ownership, d.ownership
                );
            }
            if s.is_author != d.is_author || !s.is_major {
                let _ = writeln!(
                    errs,
                    "{} {}: author {} major {}",
                    fe.path, d.key, s.is_author, s.is_major
                );
            }
        }
    }

    let spec = report::specialization(analysis);
    let timeline: Vec<(String, usize, usize, usize)> = spec
        .snapshots
        .iter()
        .map(|s| {
            (
                s.year_month.to_string(),
                s.generalist,
                s.specialist,
                s.mixed,
            )
        })
        .collect();
    let want: Vec<(String, usize, usize, usize)> = expect
        .timeline
        .iter()
        .map(|&(m, g, s, x)| (m.to_owned(), g, s, x))
        .collect();
    if timeline != want {
        let _ = writeln!(errs, "timeline {timeline:?} != {want:?}");
    }

    let eval = |rows: &[EvaluationResult], metric: Metric, agg: Aggregation| {
        rows.iter()
            .find(|r| r.metric == metric && r.aggregation == agg)
            .cloned()
    };
    config.aggregation = Aggregation::Macro;
    let rows = pipeline::run_evaluate(&config, &[Metric::Doa, Metric::Ownership])
        .map_err(|e| e.to_string())?;
    for (metric, want, want_macro) in [
        (Metric::Doa, expect.doa, expect.doa_macro),
        (Metric::Ownership, expect.ownership, expect.ownership_macro),
    ] {
        let micro = eval(&rows, metric, Aggregation::Micro).ok_or("missing micro row")?;
        let ok = micro
            .precision
            .is_some_and(|p| close(p, want.precision, EPS))
            && micro.recall.is_some_and(|r| close(r, want.recall, EPS))
            && close(micro.recommended_dev_pct, want.dev_pct, EPS);
        if !ok {
            let _ = writeln!(
                errs,
                "{} micro: P {:?} R {:?} devs {} (want {} {} {})",
                metric.label(),
                micro.precision,
                micro.recall,
                micro.recommended_dev_pct,
                want.precision,
                want.recall,
                want.dev_pct
            );
        }
        if let Some((p, r)) = want_macro {
            let m = eval(&rows, metric, Aggregation::Macro).ok_or("missing macro row")?;
            if !(m.precision.is_some_and(|x| close(x, p, EPS))
                && m.recall.is_some_and(|x| close(x, r, EPS)))
            {
                let _ = writeln!(
                    errs,
                    "{} macro: P {:?} R {:?} (want {p} {r})",
                    metric.label(),
                    m.precision,
                    m.recall
                );
            }
        }
    }

    config.aggregation = Aggregation::Micro;
    let report = pipeline::run_report(&config).map_err(|e| e.to_string())?;
    let gsm = report
        .gsm_pct
        .map(|g| (g.generalist_pct, g.specialist_pct, g.mixed_pct));
    let gsm_ok = gsm.is_some_and(|(g, s, m)| {
        close(g, expect.gsm.0, EPS) && close(s, expect.gsm.1, EPS) && close(m, expect.gsm.2, EPS)
    });
    let counts = (
        report.files,
        report.variabilities.blocks,
        report.variabilities.distinct_macros,
        report.commits,
        report.devs,
    );
    let want_counts = (
        expect.files,
        expect.blocks,
        expect.macros,
        expect.commits,
        expect.devs,
    );
    if counts != want_counts || !gsm_ok {
        let _ = writeln!(
            errs,
            "report {counts:?} {gsm:?} != {want_counts:?} {:?}",
            expect.gsm
        );
    }
    if !close(
        report.doa_precision.unwrap_or(f64::NAN),
        expect.doa.precision,
        EPS,
    ) || !close(
        report.ownership_recall.unwrap_or(f64::NAN),
        expect.ownership.recall,
        EPS,
    ) {
        let _ = writeln!(
            errs,
            "report evaluation columns disagree with evaluation rows"
        );
    }

    if errs.is_empty() {
        Ok(Checked { outcome, report })
    } else {
        Err(errs)
    }
}
