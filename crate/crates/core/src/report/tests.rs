use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;

use super::*;
use crate::corpus::{Corpus, GenConfig, Instance, SubsetSumInstance, TaskKind};
use crate::harness::{
    run_benchmark, Fault, MockEndpoint, MockReply, Persona, RetryPolicy, RoundPlan, RunConfig, TRANSCRIPTS_FILE,
};
use crate::testutil::{appendix_ss_item, item, small_corpus};

fn cfg() -> RunConfig {
    RunConfig {
        retry: RetryPolicy {
            max_retries: 0,
            backoff_ms: 0,
            max_backoff_ms: 0,
        },
        ..Default::default()
    }
}

fn run(corpus: &Corpus, persona: Persona, dir: &Path) -> ScoredRun {
    run_benchmark(&MockEndpoint::persona(persona), corpus, &cfg(), dir).unwrap();
    score_run(dir, corpus).unwrap()
}

fn two_item_corpus() -> Corpus {
    let small = item(
        "ss-small",
        Instance::SubsetSum(SubsetSumInstance {
            elements: vec![1, 2, 3, 4],
            target: 5,
            seed: 0,
        }),
    );
    Corpus {
        schema_version: 1,
        task_kind: TaskKind::SubsetSum,
        config: GenConfig::default_for(TaskKind::SubsetSum),
        seed: 0,
        items: vec![appendix_ss_item(), small],
    }
}

/// Replies chosen per question, confidence per question.
fn fixture_mock() -> MockEndpoint {
    MockEndpoint::from_fn(|req, _| {
        let big = req.messages[0].content.contains("{18, 25, 16");
        if req.messages.len() == 1 {
            MockReply::text(if big {
                "Solution 1: {22, 40}\nSolution 2: {14, 48}\nSolution 3: {1, 2}"
            } else {
                "Solution 1: {1, 4}"
            })
        } else {
            MockReply::text(if big {
                "[[CONFIDENCE: \\boxed{90}]]"
            } else {
                "[[CONFIDENCE: \\boxed{50}]]"
            })
        }
    })
}

#[test]
fn hand_computed_fixture() {
    let corpus = two_item_corpus();
    let dir = tempfile::tempdir().unwrap();
    run_benchmark(&fixture_mock(), &corpus, &cfg(), dir.path()).unwrap();
    let s = score_run(dir.path(), &corpus).unwrap().summary;
    let close = |a: Option<f64>, b: f64| assert!((a.unwrap() - b).abs() < 1e-12, "{a:?} vs {b}");
    close(s.precision.fraction, (2.0 / 3.0 + 1.0) / 2.0);
    close(s.recall.fraction, (0.4 + 0.5) / 2.0);
    close(s.confidence.fraction, 0.7);
    close(s.ece_recall.fraction, 0.5 * (0.4f64 - 0.9).abs());
    close(s.ece_precision.fraction, 0.5 * (2.0f64 / 3.0 - 0.9).abs() + 0.5 * 0.5);
    assert_eq!(s.scored, 2);
    assert_eq!(s.exclusions, Exclusions::default());
    assert!(s.behavior.is_none());
}

#[test]
fn perfect_run_is_calibrated() {
    let corpus = small_corpus(6, 11);
    let dir = tempfile::tempdir().unwrap();
    let s = run(&corpus, Persona::builtin("perfect").unwrap(), dir.path()).summary;
    assert_eq!(s.precision.fraction, Some(1.0));
    assert_eq!(s.recall.fraction, Some(1.0));
    assert_eq!(s.ece_recall.fraction, Some(0.0));
    assert_eq!(s.ece_recall.percent, Some(0.0));
}

#[test]
fn failures_are_excluded_and_counted() {
    let corpus = small_corpus(6, 12);
    let victim = corpus.items[1].question_text.clone();
    let persona = MockEndpoint::persona(Persona::default());
    let mock = MockEndpoint::from_fn(move |req, _| {
        if req.messages[0].content.contains(&victim) {
            return MockReply::Fault(Fault::Http(502));
        }
        MockReply::text(
            crate::harness::ChatClient::complete(&persona, req)
                .unwrap()
                .response
                .content(),
        )
    });
    let dir = tempfile::tempdir().unwrap();
    run_benchmark(&mock, &corpus, &cfg(), dir.path()).unwrap();
    let s = score_run(dir.path(), &corpus).unwrap().summary;
    assert_eq!(s.exclusions.endpoint_failed, 1);
    assert_eq!(s.scored, 5);
    assert_eq!(s.levels.iter().map(|l| l.count).sum::<usize>(), corpus.items.len() - 1);
}

#[test]
fn refuses_a_drifted_corpus() {
    let corpus = small_corpus(3, 13);
    let dir = tempfile::tempdir().unwrap();
    run(&corpus, Persona::default(), dir.path());
    let mut drifted = corpus.clone();
    drifted.items[0].question_text.push(' ');
    assert!(matches!(score_run(dir.path(), &drifted), Err(ReportError::Mismatch(_))));
}

#[test]
fn scoring_is_order_independent_and_idempotent() {
    let corpus = small_corpus(8, 14);
    let dir = tempfile::tempdir().unwrap();
    let a = run(&corpus, Persona::builtin("explorer").unwrap(), dir.path());
    let path = dir.path().join(TRANSCRIPTS_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.reverse();
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let b = score_run(dir.path(), &corpus).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, score_run(dir.path(), &corpus).unwrap());
}

#[test]
fn reliability_csv_recomputes_ece() {
    let corpus = small_corpus(12, 15);
    let dir = tempfile::tempdir().unwrap();
    let persona = Persona {
        recall: 0.6,
        confidence: 70,
        confidence_jitter: 25,
        shuffle: true,
        ..Default::default()
    };
    let scored = run(&corpus, persona, dir.path());
    let out = tempfile::tempdir().unwrap();
    write_scored(out.path(), &scored).unwrap();
    let mut reader = csv::Reader::from_path(out.path().join("reliability_recall.csv")).unwrap();
    let rows: Vec<(usize, Option<f64>, Option<f64>)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let opt = |i: usize| r[i].parse::<f64>().ok();
            (r[2].parse().unwrap(), opt(3), opt(4))
        })
        .collect();
    let n: usize = rows.iter().map(|r| r.0).sum();
    let recomputed: f64 = rows
        .iter()
        .filter(|r| r.0 > 0)
        .map(|&(k, c, p)| k as f64 / n as f64 * (p.unwrap() - c.unwrap()).abs())
        .sum();
    assert_eq!(recomputed, scored.summary.ece_recall.fraction.unwrap());
}

#[test]
fn scores_file_rebuilds_the_summary() {
    let corpus = small_corpus(9, 16);
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        plan: RoundPlan {
            recheck: true,
            explore: false,
        },
        ..cfg()
    };
    run_benchmark(
        &MockEndpoint::persona(Persona::builtin("explorer").unwrap()),
        &corpus,
        &c,
        dir.path(),
    )
    .unwrap();
    let scored = score_run(dir.path(), &corpus).unwrap();
    assert!(scored.summary.behavior.is_some());
    let out = tempfile::tempdir().unwrap();
    write_scored(out.path(), &scored).unwrap();
    let loaded = load_scored(out.path()).unwrap();
    assert_eq!(loaded, scored);
    let bands: BTreeMap<usize, crate::corpus::Band> = corpus
        .items
        .iter()
        .map(|i| (i.level.level_index, i.level.band))
        .collect();
    let mut excl = loaded.summary.exclusions;
    excl.missing_confidence = 0;
    let rebuilt = summarize(
        loaded.summary.run.clone(),
        corpus.items.len(),
        &loaded.records,
        &bands,
        excl,
    )
    .unwrap();
    assert_eq!(rebuilt, scored.summary);
    // harder levels come first
    let mins: Vec<usize> = rebuilt.levels.iter().map(|l| l.band_min.unwrap()).collect();
    assert!(mins.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn self_pairing_gives_zero_vectors() {
    let corpus = small_corpus(6, 17);
    let dir = tempfile::tempdir().unwrap();
    let a = run(&corpus, Persona::builtin("calibrated").unwrap(), dir.path());
    let (moves, summary) = movement(&a, &a).unwrap();
    assert_eq!(summary.pairs, 6);
    assert!(moves
        .iter()
        .all(|m| m.delta_confidence == 0.0 && m.delta_recall == 0.0 && m.direction == "none"));
}

#[test]
fn figures_and_paired_vectors() {
    let corpus = small_corpus(9, 18);
    let root = tempfile::tempdir().unwrap();
    let short = run(
        &corpus,
        Persona::builtin("overconfident").unwrap(),
        &root.path().join("short"),
    );
    let long = run(
        &corpus,
        Persona::builtin("calibrated").unwrap(),
        &root.path().join("long"),
    );
    let runs = vec![("short".to_owned(), short.clone()), ("long".to_owned(), long)];
    let out = root.path().join("fig");
    let files = emit_figures(&runs, true, &out).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for expected in [
        "summary.csv",
        "joint_histogram.csv",
        "reliability.csv",
        "levels.csv",
        "length_confidence.csv",
        "stages.csv",
        "temperature.csv",
        "movement.csv",
        "movement_summary.json",
    ] {
        assert!(names.iter().any(|n| n == expected), "{expected}");
    }
    let ms: MovementSummary =
        serde_json::from_str(&std::fs::read_to_string(out.join("movement_summary.json")).unwrap()).unwrap();
    assert_eq!(ms.pairs, 9);
    assert_eq!(ms.up_left_share, Some(1.0));

    let hist = std::fs::read_to_string(out.join("joint_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 2 * 100);

    let other = small_corpus(9, 19);
    let dir = root.path().join("other");
    let foreign = run(&other, Persona::default(), &dir);
    let mismatched = vec![("short".to_owned(), short), ("other".to_owned(), foreign)];
    assert!(matches!(
        emit_figures(&mismatched, true, &root.path().join("x")),
        Err(ReportError::Mismatch(_))
    ));
}

#[test]
fn percent_examples() {
    assert_eq!(percent_string(0.85), "85.0000");
    assert_eq!(percent_string(0.0), "0.0000");
    assert_eq!(percent_string(1.0), "100.0000");
    assert_eq!(percent_string(0.0005), "0.0500");
    assert_eq!(percent_string(0.7822), "78.2200");
}

proptest! {
    #[test]
    fn percent_is_fraction_times_hundred(f in 0.0f64..=1.0) {
        let frac = fraction_string(f);
        let pct = percent_string(f);
        // shift the point two places right in the fraction string
        let (i, d) = frac.split_once('.').unwrap();
        let shifted = format!("{}.{}", (i.to_owned() + &d[..2]).trim_start_matches('0'), &d[2..]);
        let shifted = if shifted.starts_with('.') { format!("0{shifted}") } else { shifted };
        prop_assert_eq!(&pct, &shifted);
        let rate = Rate::new(Some(f), 1);
        prop_assert_eq!(format!("{:.4}", rate.percent.unwrap()), pct);
    }
}
