//! Scoring run directories against ground truth and emitting the data
//! tables behind calibration plots. Column names are listed in
//! `docs/report-columns.md`.

mod figures;
mod score;

pub use figures::{emit_figures, movement, Movement, MovementSummary};
pub use score::{
    load_scored, score_run, score_transcript, summarize, write_scored, BehaviorSummary, Exclusions, LevelSummary, Rate,
    RunInfo, RunSummary, ScoredRun, StageSummary, ECE_BINS, SCORES_FILE, SUMMARY_FILE,
};

use crate::corpus::CorpusError;
use crate::harness::HarnessError;
use crate::metrics::MetricsError;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Fixed-point rendering used for every fraction column.
pub(crate) const FRACTION_DIGITS: usize = 6;

/// `fraction` at six decimals with the point moved two places, so a
/// percentage always equals its fraction times 100 at output precision.
pub fn percent_string(fraction: f64) -> String {
    let text = format!("{fraction:.FRACTION_DIGITS$}");
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", text.as_str()),
    };
    let (int, frac) = digits.split_once('.').expect("fixed-point output has a point");
    let whole = format!("{int}{}", &frac[..2]);
    let whole = whole.trim_start_matches('0');
    let whole = if whole.is_empty() { "0" } else { whole };
    format!("{sign}{whole}.{}", &frac[2..])
}

pub fn fraction_string(fraction: f64) -> String {
    format!("{fraction:.FRACTION_DIGITS$}")
}

#[cfg(test)]
mod tests;
