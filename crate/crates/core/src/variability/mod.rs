//! Classification of C source lines as variable or mandatory code.
//!
//! A line is variable when it is a conditional-compilation directive
//! (`#if`, `#ifdef`, `#ifndef`, `#elif`, `#else`, `#endif`) or lies inside
//! a conditional region. Every other line, including `#define` and
//! `#include` outside conditionals, is mandatory.
//!
//! The analysis is syntactic. Macro expressions are recorded but never
//! evaluated, so `#if 0` regions are variable code like any other. Comments
//! and string literals are not stripped before directive detection.

mod directive;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::text::split_lines;
use directive::{expression_identifiers, logical_lines, Conditional, LogicalKind, LogicalLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectiveKind {
    If,
    Ifdef,
    Ifndef,
    Elif,
    Else,
}

/// One branch of a conditional block as seen from a line inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionFrame {
    pub directive: DirectiveKind,
    /// Expression text after the directive keyword, comments removed.
    /// Empty for `#else`.
    pub raw_expression: String,
    /// Conditions of the earlier branches of the same block, which must all
    /// be false for this branch to be taken. `#ifndef X` contributes `!X`.
    pub negated_predecessors: Vec<String>,
    pub macro_identifiers: BTreeSet<String>,
    /// Ordinal of the block within its file.
    pub block: u32,
    /// 0 for the opening branch, incremented by each `#elif`/`#else`.
    pub branch: u32,
    /// Raw expression of the block's opening directive.
    pub opening_expression: String,
}

impl ConditionFrame {
    /// The condition under which this branch is taken, excluding the
    /// negated predecessors.
    pub fn condition(&self) -> String {
        match self.directive {
            DirectiveKind::Ifndef => format!("!{}", self.raw_expression),
            _ => self.raw_expression.clone(),
        }
    }

    /// Expression naming the variability this branch belongs to. `#else`
    /// branches report their block's opening expression.
    pub fn impacted_expression(&self) -> &str {
        if self.raw_expression.is_empty() {
            &self.opening_expression
        } else {
            &self.raw_expression
        }
    }
}

/// Conjunction of the frames enclosing a line, outermost first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PresenceCondition {
    frames: Arc<[ConditionFrame]>,
}

impl PresenceCondition {
    pub fn mandatory() -> Self {
        Self::default()
    }

    pub fn frames(&self) -> &[ConditionFrame] {
        &self.frames
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn is_mandatory(&self) -> bool {
        self.frames.is_empty()
    }

    fn prefix(&self, len: usize) -> Self {
        Self {
            frames: self.frames[..len].into(),
        }
    }

    fn with_pushed(&self, frame: ConditionFrame) -> Self {
        let mut frames = self.frames.to_vec();
        frames.push(frame);
        Self {
            frames: frames.into(),
        }
    }

    fn with_top_replaced(&self, frame: ConditionFrame) -> Self {
        let mut frames = self.frames.to_vec();
        if let Some(top) = frames.last_mut() {
            *top = frame;
        }
        Self {
            frames: frames.into(),
        }
    }
}

impl fmt::Display for PresenceCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frames.is_empty() {
            return f.write_str("true");
        }
        let mut terms = Vec::new();
        for frame in self.frames.iter() {
            for p in &frame.negated_predecessors {
                terms.push(format!("¬({p})"));
            }
            if frame.directive != DirectiveKind::Else {
                terms.push(frame.condition());
            }
        }
        f.write_str(&terms.join(" ∧ "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineClass {
    Variable,
    Mandatory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineAnnotation {
    /// 1-based.
    pub line_no: usize,
    pub classification: LineClass,
    pub presence_condition: PresenceCondition,
    pub nesting_depth: usize,
    /// Line belongs to a conditional directive (including continuation
    /// lines, stray directives and excluded include guards).
    pub is_directive_line: bool,
    /// Line belongs to the opening or closing directive of an excluded
    /// include guard.
    pub include_guard_directive: bool,
}

impl LineAnnotation {
    pub fn is_variable(&self) -> bool {
        self.classification == LineClass::Variable
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableRegion {
    /// 1-based, inclusive.
    pub start_line: usize,
    /// 1-based, inclusive.
    pub end_line: usize,
    pub presence_condition: PresenceCondition,
    pub is_include_guard: bool,
}

impl VariableRegion {
    /// The branch frame this region was built for; `None` for include guards.
    pub fn frame(&self) -> Option<&ConditionFrame> {
        self.presence_condition.frames().last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerOptions {
    pub exclude_include_guards: bool,
}

impl Default for AnalyzerOptions {
    fn default() -> Self {
        Self {
            exclude_include_guards: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerWarningKind {
    StrayEndif,
    StrayElse,
    StrayElif,
    BranchAfterElse,
    Unterminated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerWarning {
    pub kind: AnalyzerWarningKind,
    /// 1-based line of the offending directive.
    pub line: usize,
}

impl fmt::Display for AnalyzerWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            AnalyzerWarningKind::StrayEndif => "#endif without matching #if ignored",
            AnalyzerWarningKind::StrayElse => "#else without matching #if ignored",
            AnalyzerWarningKind::StrayElif => "#elif without matching #if ignored",
            AnalyzerWarningKind::BranchAfterElse => "conditional branch after #else",
            AnalyzerWarningKind::Unterminated => "#if without #endif extends to end of file",
        };
        write!(f, "line {}: {what}", self.line)
    }
}

/// Annotations for every physical line of a file plus recovery warnings.
#[derive(Debug, Clone, Default)]
pub struct SourceAnalysis {
    pub annotations: Vec<LineAnnotation>,
    pub warnings: Vec<AnalyzerWarning>,
}

impl SourceAnalysis {
    pub fn has_variable(&self) -> bool {
        self.annotations.iter().any(LineAnnotation::is_variable)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariabilityCount {
    /// One per `#if`/`#ifdef`/`#ifndef`, regardless of branch count.
    pub blocks: usize,
    /// Distinct macro identifiers referenced by any conditional.
    pub distinct_macros: usize,
}

/// Classifies every physical line of `content`.
pub fn annotate_lines(content: &str, options: &AnalyzerOptions) -> Vec<LineAnnotation> {
    analyze_source(content, options).annotations
}

/// Logical-line indices of the opening `#ifndef` and closing `#endif` of an
/// include guard, if the file has one.
fn detect_include_guard(logical: &[LogicalLine]) -> Option<(usize, usize)> {
    let mut conditionals = logical
        .iter()
        .enumerate()
        .filter_map(|(i, l)| match &l.kind {
            LogicalKind::Conditional { kind, expression } => Some((i, *kind, expression)),
            _ => None,
        });
    let (open, kind, guard_macro) = conditionals.next()?;
    if kind != Conditional::Ifndef || guard_macro.is_empty() {
        return None;
    }
    let next_code = logical[open + 1..]
        .iter()
        .find(|l| !matches!(l.kind, LogicalKind::Code { blank: true }))?;
    match &next_code.kind {
        LogicalKind::Define { name: Some(name) } if name == guard_macro => {}
        _ => return None,
    }

    let mut depth = 1usize;
    let mut close = None;
    for (i, kind, _) in conditionals {
        if close.is_some() {
            // Conditionals after the guard's #endif.
            return None;
        }
        match kind {
            Conditional::If | Conditional::Ifdef | Conditional::Ifndef => depth += 1,
            Conditional::Elif | Conditional::Else if depth == 1 => return None,
            Conditional::Endif => {
                depth -= 1;
                if depth == 0 {
                    close = Some(i);
                }
            }
            _ => {}
        }
    }
    close.map(|c| (open, c))
}

struct OpenBlock {
    /// None for an excluded include guard.
    frame: Option<ConditionFrame>,
    conditions: Vec<String>,
    identifiers: BTreeSet<String>,
    seen_else: bool,
    opened_at: usize,
}

/// Classifies every physical line of `content` and reports directive
/// imbalance. Never fails: stray `#endif`/`#else`/`#elif` lines are
/// ignored (mandatory), and unterminated blocks extend to end of file.
pub fn analyze_source(content: &str, options: &AnalyzerOptions) -> SourceAnalysis {
    let physical = split_lines(content);
    let logical = logical_lines(&physical);
    let guard = if options.exclude_include_guards {
        detect_include_guard(&logical)
    } else {
        None
    };

    let mut annotations = Vec::with_capacity(physical.len());
    let mut warnings = Vec::new();
    let mut stack: Vec<OpenBlock> = Vec::new();
    let mut pc = PresenceCondition::mandatory();
    let mut next_block = 0u32;

    let mut emit =
        |line: &LogicalLine, pc: &PresenceCondition, directive: bool, guard_line: bool| {
            for idx in line.first..=line.last {
                annotations.push(LineAnnotation {
                    line_no: idx + 1,
                    classification: if pc.is_mandatory() {
                        LineClass::Mandatory
                    } else {
                        LineClass::Variable
                    },
                    presence_condition: pc.clone(),
                    nesting_depth: pc.depth(),
                    is_directive_line: directive,
                    include_guard_directive: guard_line,
                });
            }
        };

    for (li, line) in logical.iter().enumerate() {
        let (kind, expression) = match &line.kind {
            LogicalKind::Conditional { kind, expression } => (*kind, expression),
            _ => {
                emit(line, &pc, false, false);
                continue;
            }
        };
        let at = line.first + 1;
        match kind {
            Conditional::If | Conditional::Ifdef | Conditional::Ifndef => {
                let block = next_block;
                next_block += 1;
                if guard.is_some_and(|(open, _)| open == li) {
                    stack.push(OpenBlock {
                        frame: None,
                        conditions: Vec::new(),
                        identifiers: BTreeSet::new(),
                        seen_else: false,
                        opened_at: at,
                    });
                    emit(line, &pc, true, true);
                    continue;
                }
                let (directive, identifiers) = match kind {
                    Conditional::If => (DirectiveKind::If, expression_identifiers(expression)),
                    Conditional::Ifdef => (DirectiveKind::Ifdef, single_identifier(expression)),
                    _ => (DirectiveKind::Ifndef, single_identifier(expression)),
                };
                let frame = ConditionFrame {
                    directive,
                    raw_expression: expression.clone(),
                    negated_predecessors: Vec::new(),
                    macro_identifiers: identifiers.clone(),
                    block,
                    branch: 0,
                    opening_expression: expression.clone(),
                };
                pc = pc.with_pushed(frame.clone());
                stack.push(OpenBlock {
                    conditions: vec![frame.condition()],
                    frame: Some(frame),
                    identifiers,
                    seen_else: false,
                    opened_at: at,
                });
                emit(line, &pc, true, false);
            }
            Conditional::Elif | Conditional::Else => {
                let Some(open) = stack.last_mut() else {
                    warnings.push(AnalyzerWarning {
                        kind: if kind == Conditional::Else {
                            AnalyzerWarningKind::StrayElse
                        } else {
                            AnalyzerWarningKind::StrayElif
                        },
                        line: at,
                    });
                    emit(line, &pc, true, false);
                    continue;
                };
                let Some(prev) = open.frame.as_ref() else {
                    // Cannot happen: guards with branches are not detected.
                    emit(line, &pc, true, false);
                    continue;
                };
                if open.seen_else {
                    warnings.push(AnalyzerWarning {
                        kind: AnalyzerWarningKind::BranchAfterElse,
                        line: at,
                    });
                }
                let frame = if kind == Conditional::Else {
                    open.seen_else = true;
                    ConditionFrame {
                        directive: DirectiveKind::Else,
                        raw_expression: String::new(),
                        negated_predecessors: open.conditions.clone(),
                        macro_identifiers: open.identifiers.clone(),
                        block: prev.block,
                        branch: prev.branch + 1,
                        opening_expression: prev.opening_expression.clone(),
                    }
                } else {
                    let own = expression_identifiers(expression);
                    let mut all = open.identifiers.clone();
                    all.extend(own.iter().cloned());
                    ConditionFrame {
                        directive: DirectiveKind::Elif,
                        raw_expression: expression.clone(),
                        negated_predecessors: open.conditions.clone(),
                        macro_identifiers: all,
                        block: prev.block,
                        branch: prev.branch + 1,
                        opening_expression: prev.opening_expression.clone(),
                    }
                };
                open.conditions.push(frame.condition());
                open.identifiers
                    .extend(frame.macro_identifiers.iter().cloned());
                open.frame = Some(frame.clone());
                pc = pc.with_top_replaced(frame);
                emit(line, &pc, true, false);
            }
            Conditional::Endif => match stack.pop() {
                None => {
                    warnings.push(AnalyzerWarning {
                        kind: AnalyzerWarningKind::StrayEndif,
                        line: at,
                    });
                    emit(line, &pc, true, false);
                }
                Some(OpenBlock { frame: None, .. }) => emit(line, &pc, true, true),
                Some(_) => {
                    emit(line, &pc, true, false);
                    pc = pc.prefix(pc.depth() - 1);
                }
            },
        }
    }

    warnings.extend(stack.iter().map(|open| AnalyzerWarning {
        kind: AnalyzerWarningKind::Unterminated,
        line: open.opened_at,
    }));

    SourceAnalysis {
        annotations,
        warnings,
    }
}

fn single_identifier(expression: &str) -> BTreeSet<String> {
    expression_identifiers(expression)
        .into_iter()
        .take(1)
        .collect()
}

/// One region per conditional branch, plus the include-guard region when
/// the guard was excluded. A branch spans its directive line through the
/// line before the next sibling directive; the final branch includes
/// `#endif`. Regions are ordered by start line, outer before inner.
pub fn extract_regions(annotations: &[LineAnnotation]) -> Vec<VariableRegion> {
    let mut regions: Vec<VariableRegion> = Vec::new();
    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut guard: Option<(usize, usize)> = None;

    for a in annotations {
        if a.include_guard_directive {
            guard = Some(match guard {
                None => (a.line_no, a.line_no),
                Some((s, _)) => (s, a.line_no),
            });
        }
        for (d, frame) in a.presence_condition.frames().iter().enumerate() {
            match index.get(&(frame.block, frame.branch)) {
                Some(&i) => regions[i].end_line = a.line_no,
                None => {
                    index.insert((frame.block, frame.branch), regions.len());
                    regions.push(VariableRegion {
                        start_line: a.line_no,
                        end_line: a.line_no,
                        presence_condition: a.presence_condition.prefix(d + 1),
                        is_include_guard: false,
                    });
                }
            }
        }
    }

    if let Some((start_line, end_line)) = guard {
        let at = regions
            .iter()
            .position(|r| r.start_line > start_line)
            .unwrap_or(regions.len());
        regions.insert(
            at,
            VariableRegion {
                start_line,
                end_line,
                presence_condition: PresenceCondition::mandatory(),
                is_include_guard: true,
            },
        );
    }
    regions
}

/// Counts conditional blocks and distinct macros across files, skipping
/// include-guard regions.
pub fn count_variabilities<'a, I>(files: I) -> VariabilityCount
where
    I: IntoIterator<Item = &'a [VariableRegion]>,
{
    let mut blocks = 0;
    let mut macros: BTreeSet<&str> = BTreeSet::new();
    for regions in files {
        for region in regions.iter().filter(|r| !r.is_include_guard) {
            if region.frame().is_some_and(|f| f.branch == 0) {
                blocks += 1;
            }
            for frame in region.presence_condition.frames() {
                macros.extend(frame.macro_identifiers.iter().map(String::as_str));
            }
        }
    }
    VariabilityCount {
        blocks,
        distinct_macros: macros.len(),
    }
}
