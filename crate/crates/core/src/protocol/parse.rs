//! Free-text reply parsing.
//!
//! Parsing is separate from validity: a well-formed answer that breaks the
//! instance constraints is kept, because it must count against precision.
//! Malformed blocks are skipped with a diagnostic and never abort a parse.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Assignment, ScheduleSolution, SubsetSolution, TaskKind};
use crate::oracle::{Solution, SolutionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChangeFlag {
    Unchange,
    Change,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub solutions: SolutionSet,
    /// 0–100 verbal confidence.
    pub confidence: Option<u8>,
    pub change_flag: Option<ChangeFlag>,
    pub diagnostics: Vec<String>,
}

impl ParseOutcome {
    pub fn empty(kind: TaskKind) -> Self {
        Self {
            solutions: SolutionSet::new(kind),
            confidence: None,
            change_flag: None,
            diagnostics: Vec::new(),
        }
    }

    /// No parseable solution; scored as an empty answer.
    pub fn is_empty_answer(&self) -> bool {
        self.solutions.is_empty()
    }
}

pub const EMPTY_ANSWER: &str = "EmptyAnswer: no parseable solution blocks";

static THINK_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<think>.*?</think>").unwrap());
static SOLUTION_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[ \t>*#_\-]*solution[ \t]*#?[ \t]*(\d+)[ \t]*[*_]*[ \t]*[:.：]?[ \t]*[*_]*").unwrap()
});
static INT_LIST: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\{\[]([^\{\}\[\]]*)[\}\]]").unwrap());
static BOXED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\boxed\{([^{}]*)\}").unwrap());
static CONF_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\[\[\s*CONFIDENCE\s*:\s*\\boxed\{([^{}]*)\}\s*\]\]").unwrap());
static CONF_LOOSE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)CONFIDENCE.{0,40}?(-?\d+(?:\.\d+)?)").unwrap());

/// Removes reasoning traces: complete `<think>…</think>` spans, anything
/// before a dangling `</think>`, and anything after an unclosed `<think>`.
pub fn strip_reasoning(text: &str) -> String {
    let mut out = THINK_BLOCK.replace_all(text, "").into_owned();
    if let Some(pos) = out.rfind("</think>") {
        out = out[pos + "</think>".len()..].to_owned();
    }
    if let Some(pos) = out.find("<think>") {
        out.truncate(pos);
    }
    out
}

pub fn parse_solutions(text: &str, kind: TaskKind) -> ParseOutcome {
    let text = strip_reasoning(text);
    let mut outcome = ParseOutcome::empty(kind);
    let headers: Vec<(usize, usize, String)> = SOLUTION_HEADER
        .captures_iter(&text)
        .map(|c| {
            let m = c.get(0).unwrap();
            (m.start(), m.end(), c[1].to_owned())
        })
        .collect();

    let mut blocks: Vec<(String, &str)> = Vec::new();
    if headers.is_empty() {
        match kind {
            TaskKind::SubsetSum => {
                outcome
                    .diagnostics
                    .push("no `Solution k` headers; reading bare integer lists".into());
                for list in bare_integer_lists(&text) {
                    insert(&mut outcome, Solution::Subset(SubsetSolution::new(list)));
                }
            }
            TaskKind::TimeTabling => {
                outcome
                    .diagnostics
                    .push("no `Solution k` headers; splitting tables at header rows".into());
                for (i, table) in split_headerless_tables(&text).into_iter().enumerate() {
                    blocks.push((format!("table {}", i + 1), table));
                }
            }
        }
    } else {
        for (i, (_, body_start, label)) in headers.iter().enumerate() {
            let end = headers.get(i + 1).map_or(text.len(), |h| h.0);
            blocks.push((format!("Solution {label}"), &text[*body_start..end]));
        }
    }

    for (label, body) in blocks {
        let parsed = match kind {
            TaskKind::SubsetSum => parse_subset_block(body).map(Solution::Subset),
            TaskKind::TimeTabling => parse_schedule_block(body).map(Solution::Schedule),
        };
        match parsed {
            Ok(s) => insert(&mut outcome, s),
            Err(why) => outcome.diagnostics.push(format!("{label}: skipped, {why}")),
        }
    }
    if outcome.solutions.is_empty() {
        outcome.diagnostics.push(EMPTY_ANSWER.into());
    }
    outcome
}

fn insert(outcome: &mut ParseOutcome, s: Solution) {
    if !outcome.solutions.insert(s).expect("parser emits the requested kind") {
        outcome.diagnostics.push("duplicate solution dropped".into());
    }
}

fn parse_int_list(content: &str) -> Result<Vec<i64>, String> {
    let tokens: Vec<&str> = content
        .split(',')
        .map(|t| t.trim().trim_matches('\\').trim())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err("empty subset".into());
    }
    tokens
        .iter()
        .map(|t| t.parse::<i64>().map_err(|_| format!("non-integer token `{t}`")))
        .collect()
}

fn parse_subset_block(body: &str) -> Result<SubsetSolution, String> {
    let caps = INT_LIST.captures(body).ok_or("no brace or bracket list")?;
    parse_int_list(&caps[1]).map(SubsetSolution::new)
}

fn bare_integer_lists(text: &str) -> Vec<Vec<i64>> {
    let cleaned = BOXED.replace_all(text, "");
    INT_LIST
        .captures_iter(&cleaned)
        .filter_map(|c| parse_int_list(&c[1]).ok())
        .collect()
}

fn table_cells(line: &str) -> Option<Vec<&str>> {
    let line = line.trim();
    let inner = line.strip_prefix('|')?;
    let inner = inner.strip_suffix('|').unwrap_or(inner);
    Some(inner.split('|').map(str::trim).collect())
}

fn is_separator(cells: &[&str]) -> bool {
    cells
        .iter()
        .all(|c| !c.is_empty() && c.chars().all(|ch| matches!(ch, '-' | ':' | ' ')))
}

fn is_header(cells: &[&str]) -> bool {
    cells
        .first()
        .is_some_and(|c| c.trim_matches('*').eq_ignore_ascii_case("course"))
}

fn index_token(cell: &str, prefixes: &[&str]) -> Option<u32> {
    let cell = cell.trim().trim_matches(|c| c == '*' || c == '`');
    for p in prefixes {
        if cell.len() >= p.len() && cell[..p.len()].eq_ignore_ascii_case(p) {
            if let Ok(v) = cell[p.len()..].trim().parse() {
                return Some(v);
            }
        }
    }
    cell.parse().ok()
}

fn parse_schedule_block(body: &str) -> Result<ScheduleSolution, String> {
    let mut assignments = BTreeMap::new();
    for line in body.lines() {
        let Some(cells) = table_cells(line) else {
            continue;
        };
        if is_separator(&cells) || is_header(&cells) {
            continue;
        }
        if cells.len() != 4 {
            return Err(format!("row `{}` has {} cells", line.trim(), cells.len()));
        }
        let bad = |what: &str, c: &str| format!("unreadable {what} cell `{c}`");
        let course = index_token(cells[0], &["Course", "C"]).ok_or_else(|| bad("course", cells[0]))?;
        let time = index_token(cells[1], &["T"]).ok_or_else(|| bad("time", cells[1]))?;
        let room = index_token(cells[2], &["R"]).ok_or_else(|| bad("room", cells[2]))?;
        let teacher = index_token(cells[3], &["P"]).ok_or_else(|| bad("teacher", cells[3]))?;
        if assignments.insert(course, Assignment { time, room, teacher }).is_some() {
            return Err(format!("Course{course} listed twice"));
        }
    }
    if assignments.is_empty() {
        return Err("no table rows".into());
    }
    Ok(ScheduleSolution { assignments })
}

/// Splits header-free replies into tables, starting a new one at every
/// `| Course | ...` header row.
fn split_headerless_tables(text: &str) -> Vec<&str> {
    let mut starts = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if table_cells(line).is_some_and(|c| is_header(&c)) {
            starts.push(offset);
        }
        offset += line.len();
    }
    starts
        .iter()
        .enumerate()
        .map(|(i, &s)| &text[s..starts.get(i + 1).copied().unwrap_or(text.len())])
        .collect()
}

/// Reads the 0–100 confidence, preferring the full marker, then any
/// `\boxed{}`, then `CONFIDENCE` followed by a number within 40 characters.
pub fn parse_confidence(text: &str) -> (Option<u8>, Vec<String>) {
    let text = strip_reasoning(text);
    let mut diagnostics = Vec::new();
    let raw = CONF_MARKER
        .captures_iter(&text)
        .last()
        .map(|c| c[1].to_owned())
        .or_else(|| {
            let v = BOXED.captures_iter(&text).last().map(|c| c[1].to_owned());
            if v.is_some() {
                diagnostics.push("confidence read from bare \\boxed{}".into());
            }
            v
        })
        .or_else(|| {
            let v = CONF_LOOSE.captures_iter(&text).last().map(|c| c[1].to_owned());
            if v.is_some() {
                diagnostics.push("confidence read without marker".into());
            }
            v
        });
    let Some(raw) = raw else {
        diagnostics.push("no confidence found".into());
        return (None, diagnostics);
    };
    let cleaned = raw.trim().trim_end_matches('%').trim();
    let Ok(value) = cleaned.parse::<f64>() else {
        diagnostics.push(format!("unreadable confidence `{raw}`"));
        return (None, diagnostics);
    };
    if !(0.0..=100.0).contains(&value) {
        diagnostics.push(format!("confidence {value} out of range 0-100"));
        return (None, diagnostics);
    }
    if value.fract() != 0.0 {
        diagnostics.push(format!("fractional confidence {value} rounded"));
    }
    (Some(value.round() as u8), diagnostics)
}

/// Interprets a reply to the recheck (or exploration) turn.
///
/// `[[UNCHANGE]]` keeps `previous`; `[[CHANGE]]` parses the restated answer.
/// Without a marker the reply is parsed and counts as a change only if it
/// contains solutions. When both markers occur the later one wins.
pub fn parse_recheck(text: &str, previous: &SolutionSet) -> ParseOutcome {
    let kind = previous.kind();
    let visible = strip_reasoning(text);
    let unchange = visible.rfind("[[UNCHANGE]]");
    let change = visible.rfind("[[CHANGE]]");
    let flag = match (unchange, change) {
        (Some(u), Some(c)) => Some(if c > u {
            ChangeFlag::Change
        } else {
            ChangeFlag::Unchange
        }),
        (Some(_), None) => Some(ChangeFlag::Unchange),
        (None, Some(_)) => Some(ChangeFlag::Change),
        (None, None) => None,
    };
    match flag {
        Some(ChangeFlag::Unchange) => {
            let mut out = ParseOutcome::empty(kind);
            out.solutions = previous.clone();
            out.change_flag = Some(ChangeFlag::Unchange);
            out
        }
        Some(ChangeFlag::Change) => {
            let cleaned = visible.replace("[[CHANGE]]", "").replace("[[UNCHANGE]]", "");
            let mut out = parse_solutions(&cleaned, kind);
            out.change_flag = Some(ChangeFlag::Change);
            out
        }
        None => {
            let mut out = parse_solutions(&visible, kind);
            out.diagnostics.push("no change marker; flag inferred".into());
            out.change_flag = Some(if out.solutions.is_empty() {
                ChangeFlag::Unchange
            } else {
                ChangeFlag::Change
            });
            if out.solutions.is_empty() {
                out.solutions = previous.clone();
            }
            out
        }
    }
}
