use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{percent_string, ReportError};
use crate::corpus::{Band, BenchmarkItem, Corpus, TaskKind};
use crate::fsutil::{write_atomic, write_json_atomic};
use crate::harness::{
    load_transcripts, read_jsonl, LengthUnit, RunMeta, RunStatus, Strategy, Transcript, TranscriptStatus,
};
use crate::metrics::{
    behavior, ece, macro_mean, precision, recall, reliability, PerfKind, ReliabilityTable, ScoreRecord, StageScore,
};
use crate::oracle::SolutionSet;
use crate::protocol::Paradigm;

pub const ECE_BINS: usize = 10;
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCORES_FILE: &str = "scores.jsonl";

/// A mean over applicable records, as a fraction and a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub fraction: Option<f64>,
    pub percent: Option<f64>,
    /// Records that contributed.
    pub count: usize,
}

impl Rate {
    pub fn new(fraction: Option<f64>, count: usize) -> Self {
        Self {
            fraction,
            percent: fraction.map(|f| percent_string(f).parse().expect("decimal")),
            count,
        }
    }

    fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (m, n) = macro_mean(values);
        Self::new(m, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub model: String,
    pub paradigm: Paradigm,
    pub strategy: Strategy,
    pub temperature: f64,
    pub seed: u64,
    pub task_kind: TaskKind,
    pub corpus_hash: String,
    pub status: RunStatus,
    /// `tokens` when the endpoint reported usage, `words` otherwise,
    /// `mixed` when both occur.
    pub reasoning_length_unit: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusions {
    /// Corpus items without a transcript.
    pub missing_transcript: usize,
    pub endpoint_failed: usize,
    /// Scored, but left out of calibration.
    pub missing_confidence: usize,
    /// Scored with an empty answer set.
    pub empty_answers: usize,
    /// Scored, but precision is undefined (empty answer).
    pub precision_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSummary {
    pub csr: Rate,
    pub esc: Rate,
    pub nsd: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    /// 1 is the smallest solution space, the hardest level.
    pub difficulty_rank: usize,
    pub band_min: Option<usize>,
    pub band_max: Option<usize>,
    pub count: usize,
    pub precision: Rate,
    pub recall: Rate,
    pub confidence: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub label: String,
    pub count: usize,
    pub precision: Rate,
    pub recall: Rate,
    pub confidence: Rate,
    pub ece_recall: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub run: RunInfo,
    pub corpus_items: usize,
    pub scored: usize,
    pub precision: Rate,
    pub recall: Rate,
    pub confidence: Rate,
    pub ece_recall: Rate,
    pub ece_precision: Rate,
    pub bins: usize,
    pub reliability_recall: Option<ReliabilityTable>,
    pub reliability_precision: Option<ReliabilityTable>,
    pub behavior: Option<BehaviorSummary>,
    pub levels: Vec<LevelSummary>,
    pub stages: Vec<StageSummary>,
    pub exclusions: Exclusions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub summary: RunSummary,
    pub records: Vec<ScoreRecord>,
}

fn stage_score(
    label: &str,
    set: &SolutionSet,
    confidence: Option<f64>,
    truth: &SolutionSet,
) -> Result<StageScore, ReportError> {
    Ok(StageScore {
        label: label.to_owned(),
        precision: precision(set, truth)?,
        recall: recall(set, truth)?,
        confidence,
        answer_count: set.len(),
    })
}

/// Scores one transcript's representative answer. Failed transcripts give
/// `None`.
pub fn score_transcript(transcript: &Transcript, item: &BenchmarkItem) -> Result<Option<ScoreRecord>, ReportError> {
    if transcript.item_id != item.item_id {
        return Err(ReportError::Mismatch(format!(
            "transcript {} scored against item {}",
            transcript.item_id, item.item_id
        )));
    }
    if transcript.status == TranscriptStatus::EndpointFailed {
        return Ok(None);
    }
    let truth = &item.ground_truth;
    let primary = transcript.primary();
    let empty = SolutionSet::new(item.task_kind);
    let answer = primary.as_ref().map_or(&empty, |p| &p.solutions);
    let mut record = ScoreRecord::new(&item.item_id, answer, truth, None)?;
    record.confidence = primary.as_ref().and_then(|p| p.confidence);
    record.level = Some(item.level.level_index);
    record.reasoning_length = primary.as_ref().and_then(|p| p.reasoning_length).map(|(n, _)| n);
    record.behavioral = match transcript.recheck_pair() {
        Some((first, second)) => Some(behavior(&first, &second, truth)?),
        None => None,
    };
    for stage in transcript.stages() {
        record
            .stages
            .push(stage_score(&stage.label, &stage.solutions, stage.confidence, truth)?);
    }
    if let Some(p) = primary.filter(|p| p.label == "aggregate") {
        record
            .stages
            .push(stage_score(&p.label, &p.solutions, p.confidence, truth)?);
    }
    Ok(Some(record))
}

fn length_unit(transcripts: &[&Transcript]) -> Option<String> {
    let units: BTreeSet<LengthUnit> = transcripts
        .iter()
        .filter_map(|t| t.primary()?.reasoning_length.map(|(_, u)| u))
        .collect();
    match units.len() {
        0 => None,
        1 => Some(serde_json::to_value(units.first()?).ok()?.as_str()?.to_owned()),
        _ => Some("mixed".into()),
    }
}

/// Scores a run directory. Refuses when the run was made on another corpus.
pub fn score_run(run_dir: &Path, corpus: &Corpus) -> Result<ScoredRun, ReportError> {
    corpus.validate()?;
    let meta = RunMeta::load(run_dir)?;
    if meta.corpus_hash != corpus.content_hash() {
        return Err(ReportError::Mismatch(format!(
            "run {} was made on corpus {}, not {}",
            run_dir.display(),
            meta.corpus_hash,
            corpus.content_hash()
        )));
    }
    let mut by_id: BTreeMap<String, Transcript> = BTreeMap::new();
    for t in load_transcripts(run_dir)? {
        if corpus.item(&t.item_id).is_none() {
            return Err(ReportError::Mismatch(format!(
                "transcript for unknown item {}",
                t.item_id
            )));
        }
        by_id.insert(t.item_id.clone(), t);
    }
    let mut exclusions = Exclusions::default();
    let mut records = Vec::new();
    let mut items: Vec<&BenchmarkItem> = corpus.items.iter().collect();
    items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    for item in items {
        match by_id.get(&item.item_id) {
            None => exclusions.missing_transcript += 1,
            Some(t) => match score_transcript(t, item)? {
                Some(r) => records.push(r),
                None => exclusions.endpoint_failed += 1,
            },
        }
    }
    let info = RunInfo {
        model: meta.config.model.clone(),
        paradigm: meta.config.paradigm,
        strategy: meta.config.strategy.kind,
        temperature: meta.config.temperature,
        seed: meta.seed,
        task_kind: corpus.task_kind,
        corpus_hash: meta.corpus_hash.clone(),
        status: meta.status,
        reasoning_length_unit: length_unit(&by_id.values().collect::<Vec<_>>()),
    };
    let bands: BTreeMap<usize, Band> = corpus
        .items
        .iter()
        .map(|i| (i.level.level_index, i.level.band))
        .collect();
    let summary = summarize(info, corpus.items.len(), &records, &bands, exclusions)?;
    Ok(ScoredRun { summary, records })
}

fn stage_order(label: &str) -> (u8, u64, String) {
    let numbered = |prefix: &str| label.strip_prefix(prefix).and_then(|n| n.parse::<u64>().ok());
    match label {
        "answer" => (0, 0, String::new()),
        "recheck" => (1, 0, String::new()),
        "explore" => (2, 0, String::new()),
        "aggregate" => (3, 0, String::new()),
        _ => {
            if let Some(n) = numbered("checkpoint-") {
                (4, n, String::new())
            } else if let Some(n) = numbered("path-") {
                (5, n, String::new())
            } else {
                (6, 0, label.to_owned())
            }
        }
    }
}

fn ece_rate(records: &[ScoreRecord], kind: PerfKind) -> Rate {
    let used = records
        .iter()
        .filter(|r| r.confidence.is_some() && r.perf(kind).is_some())
        .count();
    Rate::new(ece(records, ECE_BINS, kind).ok(), used)
}

/// Aggregates per-item records. Pure, so summaries can be rebuilt from a
/// scores file alone.
pub fn summarize(
    run: RunInfo,
    corpus_items: usize,
    records: &[ScoreRecord],
    bands: &BTreeMap<usize, Band>,
    mut exclusions: Exclusions,
) -> Result<RunSummary, ReportError> {
    exclusions.missing_confidence = records.iter().filter(|r| r.confidence.is_none()).count();
    exclusions.empty_answers = records.iter().filter(|r| r.answer_count == 0).count();
    exclusions.precision_undefined = records.iter().filter(|r| r.precision.is_none()).count();

    let behavior = records.iter().any(|r| r.behavioral.is_some()).then(|| {
        let pick = |f: fn(&crate::metrics::Behavior) -> Option<f64>| {
            Rate::mean(records.iter().map(move |r| r.behavioral.as_ref().and_then(f)))
        };
        BehaviorSummary {
            csr: pick(|b| b.csr),
            esc: pick(|b| b.esc),
            nsd: pick(|b| b.nsd),
        }
    });

    let mut by_level: BTreeMap<usize, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        if let Some(l) = r.level {
            by_level.entry(l).or_default().push(r);
        }
    }
    let mut level_ids: Vec<usize> = by_level.keys().copied().collect();
    level_ids.sort_by_key(|l| (bands.get(l).map_or(usize::MAX, |b| b.min), *l));
    let levels = level_ids
        .iter()
        .enumerate()
        .map(|(rank, l)| {
            let rs = &by_level[l];
            LevelSummary {
                level: *l,
                difficulty_rank: rank + 1,
                band_min: bands.get(l).map(|b| b.min),
                band_max: bands.get(l).map(|b| b.max),
                count: rs.len(),
                precision: Rate::mean(rs.iter().map(|r| r.precision)),
                recall: Rate::mean(rs.iter().map(|r| Some(r.recall))),
                confidence: Rate::mean(rs.iter().map(|r| r.confidence)),
            }
        })
        .collect();

    let mut by_stage: BTreeMap<(u8, u64, String), (String, Vec<ScoreRecord>)> = BTreeMap::new();
    for r in records {
        for s in &r.stages {
            let entry = by_stage
                .entry(stage_order(&s.label))
                .or_insert_with(|| (s.label.clone(), Vec::new()));
            entry.1.push(ScoreRecord {
                item_id: r.item_id.clone(),
                precision: s.precision,
                recall: s.recall,
                confidence: s.confidence,
                behavioral: None,
                level: r.level,
                answer_count: s.answer_count,
                truth_count: r.truth_count,
                reasoning_length: None,
                stages: Vec::new(),
            });
        }
    }
    let stages = by_stage
        .into_values()
        .map(|(label, rs)| StageSummary {
            label,
            count: rs.len(),
            precision: Rate::mean(rs.iter().map(|r| r.precision)),
            recall: Rate::mean(rs.iter().map(|r| Some(r.recall))),
            confidence: Rate::mean(rs.iter().map(|r| r.confidence)),
            ece_recall: ece_rate(&rs, PerfKind::Recall),
        })
        .collect();

    Ok(RunSummary {
        schema_version: 1,
        run,
        corpus_items,
        scored: records.len(),
        precision: Rate::mean(records.iter().map(|r| r.precision)),
        recall: Rate::mean(records.iter().map(|r| Some(r.recall))),
        confidence: Rate::mean(records.iter().map(|r| r.confidence)),
        ece_recall: ece_rate(records, PerfKind::Recall),
        ece_precision: ece_rate(records, PerfKind::Precision),
        bins: ECE_BINS,
        reliability_recall: reliability(records, ECE_BINS, PerfKind::Recall).ok(),
        reliability_precision: reliability(records, ECE_BINS, PerfKind::Precision).ok(),
        behavior,
        levels,
        stages,
        exclusions,
    })
}

/// Writes `summary.json`, `scores.jsonl` and the two reliability tables.
pub fn write_scored(dir: &Path, scored: &ScoredRun) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    write_json_atomic(&dir.join(SUMMARY_FILE), &scored.summary)?;
    let mut body = Vec::new();
    for r in &scored.records {
        body.extend(serde_json::to_vec(r).map_err(std::io::Error::other)?);
        body.push(b'\n');
    }
    write_atomic(&dir.join(SCORES_FILE), &body)?;
    for (name, table) in [
        ("reliability_recall.csv", &scored.summary.reliability_recall),
        ("reliability_precision.csv", &scored.summary.reliability_precision),
    ] {
        if let Some(t) = table {
            write_atomic(&dir.join(name), t.to_csv().as_bytes())?;
        }
    }
    Ok(())
}

pub fn load_scored(dir: &Path) -> Result<ScoredRun, ReportError> {
    let text = std::fs::read_to_string(dir.join(SUMMARY_FILE))?;
    let summary: RunSummary =
        serde_json::from_str(&text).map_err(|e| ReportError::Invalid(format!("{}: {e}", dir.display())))?;
    let records: Vec<ScoreRecord> = read_jsonl(&dir.join(SCORES_FILE))?;
    if records.len() != summary.scored {
        return Err(ReportError::Invalid(format!(
            "{}: {} records but the summary counts {}",
            dir.display(),
            records.len(),
            summary.scored
        )));
    }
    Ok(ScoredRun { summary, records })
}
