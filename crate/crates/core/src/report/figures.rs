use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::score::{Rate, ScoredRun, ECE_BINS};
use super::{fraction_string, percent_string, ReportError};
use crate::fsutil::{write_atomic, write_json_atomic};
use crate::metrics::{bin_index, ReliabilityTable};

const EPS: f64 = 1e-12;

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn pct(r: &Rate) -> String {
    r.fraction.map(percent_string).unwrap_or_default()
}

fn frac(r: &Rate) -> String {
    r.fraction.map(fraction_string).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    write_atomic(path, &bytes)?;
    Ok(())
}

/// Per-item change between two runs on the same corpus, in the
/// (confidence, recall) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub item_id: String,
    pub from_confidence: f64,
    pub from_recall: f64,
    pub to_confidence: f64,
    pub to_recall: f64,
    pub delta_confidence: f64,
    pub delta_recall: f64,
    /// `up-left`, `up`, `right`, `none`, ... with recall on the vertical axis.
    pub direction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementSummary {
    pub pairs: usize,
    /// Items missing from either run or lacking a confidence on either side.
    pub skipped: usize,
    pub directions: BTreeMap<String, usize>,
    pub up_left_share: Option<f64>,
}

fn direction(dc: f64, dr: f64) -> String {
    let v = if dr > EPS {
        "up"
    } else if dr < -EPS {
        "down"
    } else {
        ""
    };
    let h = if dc > EPS {
        "right"
    } else if dc < -EPS {
        "left"
    } else {
        ""
    };
    match (v, h) {
        ("", "") => "none".into(),
        (v, "") => v.into(),
        ("", h) => h.into(),
        (v, h) => format!("{v}-{h}"),
    }
}

/// Pairs the records of two runs item by item.
pub fn movement(from: &ScoredRun, to: &ScoredRun) -> Result<(Vec<Movement>, MovementSummary), ReportError> {
    if from.summary.run.corpus_hash != to.summary.run.corpus_hash {
        return Err(ReportError::Mismatch(
            "paired runs were made on different corpora".into(),
        ));
    }
    let later: BTreeMap<&str, _> = to.records.iter().map(|r| (r.item_id.as_str(), r)).collect();
    let mut moves = Vec::new();
    let mut skipped = to
        .records
        .iter()
        .filter(|r| !from.records.iter().any(|f| f.item_id == r.item_id))
        .count();
    for a in &from.records {
        let pair = later
            .get(a.item_id.as_str())
            .and_then(|b| Some((a.confidence?, b.confidence?, b)));
        let Some((ca, cb, b)) = pair else {
            skipped += 1;
            continue;
        };
        let (dc, dr) = (cb - ca, b.recall - a.recall);
        moves.push(Movement {
            item_id: a.item_id.clone(),
            from_confidence: ca,
            from_recall: a.recall,
            to_confidence: cb,
            to_recall: b.recall,
            delta_confidence: dc,
            delta_recall: dr,
            direction: direction(dc, dr),
        });
    }
    let mut directions = BTreeMap::new();
    for m in &moves {
        *directions.entry(m.direction.clone()).or_insert(0) += 1;
    }
    let up_left = directions.get("up-left").copied().unwrap_or(0);
    let summary = MovementSummary {
        pairs: moves.len(),
        skipped,
        up_left_share: (!moves.is_empty()).then(|| up_left as f64 / moves.len() as f64),
        directions,
    };
    Ok((moves, summary))
}

fn reliability_rows(name: &str, table: &ReliabilityTable) -> Vec<Vec<String>> {
    table
        .bins
        .iter()
        .map(|b| {
            vec![
                name.to_owned(),
                table.perf_kind.to_string(),
                b.lo.to_string(),
                b.hi.to_string(),
                b.count.to_string(),
                num(b.mean_conf),
                num(b.mean_perf),
            ]
        })
        .collect()
}

/// Writes the figure tables for `runs` into `out`. With `paired`, the first
/// two runs are compared item by item (first to second).
pub fn emit_figures(runs: &[(String, ScoredRun)], paired: bool, out: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if runs.is_empty() {
        return Err(ReportError::Invalid("no runs to report".into()));
    }
    if paired && runs.len() != 2 {
        return Err(ReportError::Invalid(format!(
            "paired output needs exactly two runs, got {}",
            runs.len()
        )));
    }
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<(), ReportError> {
        let path = out.join(name);
        write_csv(&path, header, rows)?;
        written.push(path);
        Ok(())
    };

    let mut rows = Vec::new();
    for (name, run) in runs {
        let s = &run.summary;
        let b = s.behavior.as_ref();
        rows.push(vec![
            name.clone(),
            s.run.model.clone(),
            serde_json::to_value(s.run.paradigm)
                .unwrap()
                .as_str()
                .unwrap_or_default()
                .to_owned(),
            s.run.strategy.to_string(),
            s.run.temperature.to_string(),
            s.corpus_items.to_string(),
            s.scored.to_string(),
            frac(&s.precision),
            pct(&s.precision),
            frac(&s.recall),
            pct(&s.recall),
            frac(&s.confidence),
            pct(&s.confidence),
            frac(&s.ece_recall),
            pct(&s.ece_recall),
            frac(&s.ece_precision),
            pct(&s.ece_precision),
            b.map(|b| pct(&b.csr)).unwrap_or_default(),
            b.map(|b| pct(&b.esc)).unwrap_or_default(),
            b.map(|b| pct(&b.nsd)).unwrap_or_default(),
            s.exclusions.missing_confidence.to_string(),
            s.exclusions.empty_answers.to_string(),
            s.exclusions.endpoint_failed.to_string(),
            s.exclusions.missing_transcript.to_string(),
        ]);
    }
    emit(
        "summary.csv",
        &[
            "run",
            "model",
            "paradigm",
            "strategy",
            "temperature",
            "items",
            "scored",
            "precision",
            "precision_pct",
            "recall",
            "recall_pct",
            "confidence",
            "confidence_pct",
            "ece_recall",
            "ece_recall_pct",
            "ece_precision",
            "ece_precision_pct",
            "csr_pct",
            "esc_pct",
            "nsd_pct",
            "missing_confidence",
            "empty_answers",
            "endpoint_failed",
            "missing_transcript",
        ],
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, run) in runs {
        let mut grid = vec![vec![0usize; ECE_BINS]; ECE_BINS];
        for r in &run.records {
            if let Some(c) = r.confidence {
                grid[bin_index(r.recall, ECE_BINS)][bin_index(c, ECE_BINS)] += 1;
            }
        }
        for (ri, row) in grid.iter().enumerate() {
            for (ci, count) in row.iter().enumerate() {
                let edge = |i: usize| (i as f64 / ECE_BINS as f64).to_string();
                rows.push(vec![
                    name.clone(),
                    ri.to_string(),
                    ci.to_string(),
                    edge(ri),
                    edge(ri + 1),
                    edge(ci),
                    edge(ci + 1),
                    count.to_string(),
                ]);
            }
        }
    }
    emit(
        "joint_histogram.csv",
        &[
            "run",
            "recall_bin",
            "confidence_bin",
            "recall_lo",
            "recall_hi",
            "confidence_lo",
            "confidence_hi",
            "count",
        ],
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, run) in runs {
        for table in [&run.summary.reliability_recall, &run.summary.reliability_precision]
            .into_iter()
            .flatten()
        {
            rows.extend(reliability_rows(name, table));
        }
    }
    emit(
        "reliability.csv",
        &["run", "perf", "bin_lo", "bin_hi", "count", "mean_conf", "mean_perf"],
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, run) in runs {
        for l in &run.summary.levels {
            rows.push(vec![
                name.clone(),
                l.level.to_string(),
                l.difficulty_rank.to_string(),
                l.band_min.map(|v| v.to_string()).unwrap_or_default(),
                l.band_max.map(|v| v.to_string()).unwrap_or_default(),
                l.count.to_string(),
                num(l.confidence.fraction),
                num(l.recall.fraction),
                num(l.precision.fraction),
            ]);
        }
    }
    emit(
        "levels.csv",
        &[
            "run",
            "level",
            "difficulty_rank",
            "band_min",
            "band_max",
            "count",
            "mean_confidence",
            "mean_recall",
            "mean_precision",
        ],
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, run) in runs {
        let unit = run.summary.run.reasoning_length_unit.clone().unwrap_or_default();
        for r in &run.records {
            rows.push(vec![
                name.clone(),
                r.item_id.clone(),
                r.reasoning_length.map(|v| v.to_string()).unwrap_or_default(),
                unit.clone(),
                num(r.confidence),
                r.recall.to_string(),
            ]);
        }
    }
    emit(
        "length_confidence.csv",
        &[
            "run",
            "item_id",
            "reasoning_length",
            "length_unit",
            "confidence",
            "recall",
        ],
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, run) in runs {
        for s in &run.summary.stages {
            rows.push(vec![
                name.clone(),
                s.label.clone(),
                s.count.to_string(),
                num(s.precision.fraction),
                num(s.recall.fraction),
                num(s.confidence.fraction),
                num(s.ece_recall.fraction),
            ]);
        }
    }
    emit(
        "stages.csv",
        &[
            "run",
            "stage",
            "count",
            "mean_precision",
            "mean_recall",
            "mean_confidence",
            "ece_recall",
        ],
        rows,
    )?;

    let mut rows: Vec<Vec<String>> = runs
        .iter()
        .map(|(name, run)| {
            let s = &run.summary;
            vec![
                name.clone(),
                s.run.temperature.to_string(),
                num(s.recall.fraction),
                num(s.confidence.fraction),
                num(s.ece_recall.fraction),
            ]
        })
        .collect();
    rows.sort_by(|a, b| {
        let t = |r: &Vec<String>| r[1].parse::<f64>().unwrap_or(0.0);
        t(a).total_cmp(&t(b)).then_with(|| a[0].cmp(&b[0]))
    });
    emit(
        "temperature.csv",
        &["run", "temperature", "mean_recall", "mean_confidence", "ece_recall"],
        rows,
    )?;

    if paired {
        let (moves, summary) = movement(&runs[0].1, &runs[1].1)?;
        let rows = moves
            .iter()
            .map(|m| {
                vec![
                    m.item_id.clone(),
                    m.from_confidence.to_string(),
                    m.from_recall.to_string(),
                    m.to_confidence.to_string(),
                    m.to_recall.to_string(),
                    m.delta_confidence.to_string(),
                    m.delta_recall.to_string(),
                    m.direction.clone(),
                ]
            })
            .collect();
        emit(
            "movement.csv",
            &[
                "item_id",
                "from_confidence",
                "from_recall",
                "to_confidence",
                "to_recall",
                "delta_confidence",
                "delta_recall",
                "direction",
            ],
            rows,
        )?;
        let path = out.join("movement_summary.json");
        write_json_atomic(&path, &summary)?;
        written.push(path);
    }
    Ok(written)
}
