//! Set-based precision/recall, expected calibration error over confidence
//! bins, and the two-round retention / correction / discovery rates.
//!
//! All values are fractions in `[0, 1]`. A metric whose denominator is empty
//! is `None` ("not applicable") and is left out of averages rather than
//! being counted as zero.

use serde::{Deserialize, Serialize};

use crate::oracle::{KindMismatch, SolutionSet};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    KindMismatch(#[from] KindMismatch),
    #[error("ground-truth solution set is empty")]
    EmptyTruth,
    #[error("no records with a confidence and an applicable {0} value")]
    EmptyInput(PerfKind),
    #[error("bin count must be at least 1")]
    NoBins,
}

pub const DEFAULT_BINS: usize = 10;

/// `|Y ∩ Ŷ| / |Y|`, or `None` for an empty answer.
pub fn precision(predicted: &SolutionSet, truth: &SolutionSet) -> Result<Option<f64>, MetricsError> {
    let hits = predicted.intersection(truth)?.len();
    Ok((!predicted.is_empty()).then(|| hits as f64 / predicted.len() as f64))
}

/// `|Y ∩ Ŷ| / |Ŷ|`.
pub fn recall(predicted: &SolutionSet, truth: &SolutionSet) -> Result<f64, MetricsError> {
    if truth.is_empty() {
        return Err(MetricsError::EmptyTruth);
    }
    let hits = predicted.intersection(truth)?.len();
    Ok(hits as f64 / truth.len() as f64)
}

/// Retention (csr), correction (esc) and discovery (nsd) between two rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    pub csr: Option<f64>,
    pub esc: Option<f64>,
    pub nsd: Option<f64>,
}

pub fn behavior(round1: &SolutionSet, round2: &SolutionSet, truth: &SolutionSet) -> Result<Behavior, MetricsError> {
    let correct1 = round1.intersection(truth)?;
    let correct2 = round2.intersection(truth)?;
    let wrong1 = round1.difference(truth)?;
    let wrong2 = round2.difference(truth)?;

    let kept = correct1.intersection(&correct2)?.len();
    let csr = (!correct1.is_empty()).then(|| kept as f64 / correct1.len() as f64);

    let persisted = wrong1.intersection(&wrong2)?.len();
    let esc = (!wrong1.is_empty()).then(|| 1.0 - persisted as f64 / wrong1.len() as f64);

    let discovered = correct2.difference(round1)?.len();
    let nsd = (!truth.is_empty()).then(|| discovered as f64 / truth.len() as f64);

    Ok(Behavior { csr, esc, nsd })
}

/// Score of one answer (a round, a checkpoint, an aggregated result).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScore {
    pub label: String,
    pub precision: Option<f64>,
    pub recall: f64,
    pub confidence: Option<f64>,
    pub answer_count: usize,
}

/// Per-item metric bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub item_id: String,
    pub precision: Option<f64>,
    pub recall: f64,
    /// Verbal confidence normalised from the 0–100 scale.
    pub confidence: Option<f64>,
    #[serde(default)]
    pub behavioral: Option<Behavior>,
    #[serde(default)]
    pub level: Option<usize>,
    #[serde(default)]
    pub answer_count: usize,
    #[serde(default)]
    pub truth_count: usize,
    #[serde(default)]
    pub reasoning_length: Option<u64>,
    #[serde(default)]
    pub stages: Vec<StageScore>,
}

impl ScoreRecord {
    /// Scores a single answer; `confidence` is on the 0–100 scale.
    pub fn new(
        item_id: impl Into<String>,
        predicted: &SolutionSet,
        truth: &SolutionSet,
        confidence: Option<u8>,
    ) -> Result<Self, MetricsError> {
        Ok(Self {
            item_id: item_id.into(),
            precision: precision(predicted, truth)?,
            recall: recall(predicted, truth)?,
            confidence: confidence.map(normalize_confidence),
            behavioral: None,
            level: None,
            answer_count: predicted.len(),
            truth_count: truth.len(),
            reasoning_length: None,
            stages: Vec::new(),
        })
    }

    pub fn perf(&self, kind: PerfKind) -> Option<f64> {
        match kind {
            PerfKind::Precision => self.precision,
            PerfKind::Recall => Some(self.recall),
        }
    }
}

pub fn normalize_confidence(verbal: u8) -> f64 {
    f64::from(verbal.min(100)) / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerfKind {
    Precision,
    Recall,
}

impl std::fmt::Display for PerfKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerfKind::Precision => "precision",
            PerfKind::Recall => "recall",
        })
    }
}

/// Equal-width bins over `[0, 1]`, left-closed and right-open except the
/// last, which also takes 1.0.
pub fn bin_index(confidence: f64, bins: usize) -> usize {
    // the nudge keeps k/bins on its own bin despite rounding, e.g. 0.29 * 10
    let raw = (confidence * bins as f64 + 1e-9).floor();
    (raw.max(0.0) as usize).min(bins - 1)
}

/// Pairs of (confidence, performance) usable for calibration, plus the
/// number of records excluded for a missing side.
fn usable(records: &[ScoreRecord], kind: PerfKind) -> (Vec<(f64, f64)>, usize) {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.confidence?, r.perf(kind)?)))
        .collect();
    let excluded = records.len() - pairs.len();
    (pairs, excluded)
}

/// `Σ_m |B_m|/N · |perf(B_m) − conf(B_m)|`.
pub fn ece(records: &[ScoreRecord], bins: usize, kind: PerfKind) -> Result<f64, MetricsError> {
    if bins == 0 {
        return Err(MetricsError::NoBins);
    }
    let (pairs, _) = usable(records, kind);
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput(kind));
    }
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    let mut perf_sum = vec![0.0f64; bins];
    for &(c, p) in &pairs {
        let b = bin_index(c, bins);
        count[b] += 1;
        conf_sum[b] += c;
        perf_sum[b] += p;
    }
    let n = pairs.len() as f64;
    let mut total = 0.0;
    for b in 0..bins {
        if count[b] == 0 {
            continue;
        }
        let k = count[b] as f64;
        total += (k / n) * (perf_sum[b] / k - conf_sum[b] / k).abs();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for an empty bin.
    pub mean_conf: Option<f64>,
    pub mean_perf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub perf_kind: PerfKind,
    pub bins: Vec<ReliabilityBin>,
    /// Records that entered the table.
    pub total: usize,
    /// Records left out for a missing confidence or inapplicable metric.
    pub excluded: usize,
}

impl ReliabilityTable {
    /// Weighted gap sum over occupied bins; equals [`ece`] on the same input.
    pub fn ece(&self) -> f64 {
        let n = self.total as f64;
        self.bins
            .iter()
            .filter_map(|b| {
                let k = b.count as f64;
                Some((k / n) * (b.mean_perf? - b.mean_conf?).abs())
            })
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count,mean_conf,mean_perf\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.lo,
                b.hi,
                b.count,
                opt(b.mean_conf),
                opt(b.mean_perf)
            ));
        }
        out
    }
}

pub fn reliability(records: &[ScoreRecord], bins: usize, kind: PerfKind) -> Result<ReliabilityTable, MetricsError> {
    if bins == 0 {
        return Err(MetricsError::NoBins);
    }
    let (pairs, excluded) = usable(records, kind);
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput(kind));
    }
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    let mut perf_sum = vec![0.0f64; bins];
    for &(c, p) in &pairs {
        let b = bin_index(c, bins);
        count[b] += 1;
        conf_sum[b] += c;
        perf_sum[b] += p;
    }
    let table = (0..bins)
        .map(|b| {
            let k = count[b] as f64;
            ReliabilityBin {
                lo: b as f64 / bins as f64,
                hi: (b + 1) as f64 / bins as f64,
                count: count[b],
                mean_conf: (count[b] > 0).then(|| conf_sum[b] / k),
                mean_perf: (count[b] > 0).then(|| perf_sum[b] / k),
            }
        })
        .collect();
    Ok(ReliabilityTable {
        perf_kind: kind,
        bins: table,
        total: pairs.len(),
        excluded,
    })
}

/// Mean of the applicable values and how many were applicable.
pub fn macro_mean(values: impl IntoIterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| sum / n as f64), n)
}
