use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};
use proptest::strategy::Strategy as Gen;

use super::*;
use crate::corpus::{SubsetSolution, TaskKind};
use crate::harness::{MockEndpoint, MockReply, Persona, RetryPolicy};
use crate::metrics::recall;
use crate::protocol::build_explore_prompt;
use crate::testutil::{appendix_ss_item, small_corpus};

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

fn set(items: &[&[i64]]) -> SolutionSet {
    SolutionSet::from_solutions(
        TaskKind::SubsetSum,
        items.iter().map(|m| SubsetSolution::new(m.to_vec())),
    )
    .unwrap()
}

fn path(p: u32, items: &[&[i64]], c: Option<u8>) -> PathResult {
    PathResult {
        path: p,
        solutions: set(items),
        confidence: c,
    }
}

#[test]
fn voting_hand_example() {
    let a: &[i64] = &[22, 40];
    let b: &[i64] = &[14, 48];
    let paths = [path(0, &[a], Some(60)), path(1, &[a, b], Some(80))];
    let r = aggregate(&paths, Aggregation::Voting).unwrap();
    assert_eq!(r.final_set, set(&[a, b]));
    let support: Vec<f64> = r.support.iter().map(|s| s.support).collect();
    // canonical order puts [14, 48] first
    assert_eq!(support, vec![0.5, 1.0]);
    let expected = (1.0 * 70.0 + 0.5 * 80.0) / 1.5 / 100.0;
    assert!((r.final_confidence.unwrap() - expected).abs() < 1e-12);
    assert!((r.final_confidence.unwrap() * 100.0 - 73.333_333).abs() < 1e-4);
}

#[test]
fn median_takes_the_middle_path_verbatim() {
    let paths = [
        path(0, &[&[1, 2]], Some(90)),
        path(1, &[&[3]], Some(30)),
        path(2, &[&[4], &[5]], Some(50)),
    ];
    let r = aggregate(&paths, Aggregation::MedianConf).unwrap();
    assert_eq!(r.selected_path, Some(2));
    assert_eq!(r.final_set, paths[2].solutions);
    assert_eq!(r.final_confidence, Some(0.5));

    // even count: lower median
    let r = aggregate(&paths[..2], Aggregation::MedianConf).unwrap();
    assert_eq!(r.selected_path, Some(1));
}

#[test]
fn missing_confidences() {
    let paths = [path(0, &[&[1]], None), path(1, &[&[2]], None)];
    let m = aggregate(&paths, Aggregation::MedianConf).unwrap();
    assert_eq!(m.selected_path, Some(0));
    assert_eq!(m.final_confidence, None);
    let v = aggregate(&paths, Aggregation::Voting).unwrap();
    assert_eq!(v.final_confidence, None);
    assert_eq!(v.final_set.len(), 2);

    let empty = [path(0, &[], Some(40)), path(1, &[], Some(60))];
    let v = aggregate(&empty, Aggregation::Voting).unwrap();
    assert!(v.final_set.is_empty());
    assert_eq!(v.final_confidence, Some(0.5));
    assert!(matches!(
        aggregate(&[], Aggregation::Voting),
        Err(MitigateError::NoPaths)
    ));
}

fn arb_paths() -> impl Gen<Value = Vec<PathResult>> {
    let answer = prop::collection::vec(prop::collection::btree_set(0i64..6, 1..3), 0..5);
    prop::collection::vec((answer, prop::option::of(0u8..=100)), 1..9).prop_map(|paths| {
        paths
            .into_iter()
            .enumerate()
            .map(|(i, (answers, c))| PathResult {
                path: i as u32,
                solutions: SolutionSet::from_solutions(
                    TaskKind::SubsetSum,
                    answers
                        .into_iter()
                        .map(|s| SubsetSolution::new(s.into_iter().collect())),
                )
                .unwrap(),
                confidence: c,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn aggregation_laws(paths in arb_paths(), truth_bits in 1u32..64) {
        let truth = SolutionSet::from_solutions(
            TaskKind::SubsetSum,
            (0..6i64).filter(|b| truth_bits & (1 << b) != 0).map(|b| SubsetSolution::new(vec![b])),
        ).unwrap();
        let vote = aggregate(&paths, Aggregation::Voting).unwrap();
        let best = paths.iter().map(|p| recall(&p.solutions, &truth).unwrap()).fold(0.0, f64::max);
        prop_assert!(recall(&vote.final_set, &truth).unwrap() >= best);
        for s in &vote.support {
            prop_assert!(s.support > 0.0 && s.support <= 1.0);
            let count = paths.iter().filter(|p| p.solutions.contains(&s.solution)).count();
            prop_assert_eq!(s.support, count as f64 / paths.len() as f64);
        }
        let median = aggregate(&paths, Aggregation::MedianConf).unwrap();
        prop_assert!(paths.iter().any(|p| p.solutions == median.final_set && Some(p.path) == median.selected_path));
        if let Some(c) = median.final_confidence {
            let mut rated: Vec<u8> = paths.iter().filter_map(|p| p.confidence).collect();
            rated.sort_unstable();
            prop_assert_eq!(c, f64::from(rated[(rated.len() - 1) / 2]) / 100.0);
        }
        if paths.len() == 1 {
            let p = &paths[0];
            for r in [&vote, &median] {
                prop_assert_eq!(&r.final_set, &p.solutions);
                prop_assert_eq!(r.final_confidence, p.confidence.map(|c| f64::from(c) / 100.0));
            }
        }
    }
}

#[test]
fn explore_adds_a_missing_solution() {
    let item = appendix_ss_item();
    let persona = Persona {
        recall: 0.4,
        explore_gain: 1,
        ..Default::default()
    };
    let mock = MockEndpoint::persona(persona);
    let base = crate::harness::run_instance(&mock, &item, &cfg()).unwrap();
    let before = recall(&base.primary().unwrap().solutions, &item.ground_truth).unwrap();
    let after = sequential_explore(&mock, &item, &base, &cfg()).unwrap();
    let explored = after.primary().unwrap();
    assert_eq!(explored.label, "explore");
    assert!(recall(&explored.solutions, &item.ground_truth).unwrap() > before);
    assert!(explored.confidence.is_some());
    let cue = &after.rounds[base.rounds.len()];
    assert_eq!(cue.request.last().unwrap().content, build_explore_prompt());
    assert_eq!(
        cue.request.last().unwrap().content,
        "Wait, there may be other solutions."
    );
}

#[test]
fn explore_unchange_keeps_metrics() {
    let item = appendix_ss_item();
    let mock = MockEndpoint::scripted(vec![
        MockReply::text("Solution 1: {22, 40}"),
        MockReply::text("[[CONFIDENCE: \\boxed{70}]]"),
        MockReply::text("[[UNCHANGE]]"),
        MockReply::text("[[CONFIDENCE: \\boxed{70}]]"),
    ]);
    let base = crate::harness::run_instance(&mock, &item, &cfg()).unwrap();
    let after = sequential_explore(&mock, &item, &base, &cfg()).unwrap();
    let (a, b) = (base.primary().unwrap(), after.primary().unwrap());
    assert_eq!(a.solutions, b.solutions);
    assert_eq!(a.confidence, b.confidence);
}

#[test]
fn self_consistency_on_mock_paths() {
    let item = appendix_ss_item();
    let persona = Persona {
        recall: 0.4,
        shuffle: true,
        confidence_jitter: 20,
        ..Default::default()
    };
    let mock = MockEndpoint::persona(persona);
    for n in [1u32, 4, 32] {
        let (vote, t) = self_consistency(&mock, &item, n, Aggregation::Voting, &cfg()).unwrap();
        assert_eq!(vote.n_effective, n as usize);
        let paths = t.paths();
        let best = paths
            .iter()
            .map(|p| recall(&p.solutions, &item.ground_truth).unwrap())
            .fold(0.0, f64::max);
        assert!(recall(&vote.final_set, &item.ground_truth).unwrap() >= best);
        let (median, _) = self_consistency(&mock, &item, n, Aggregation::MedianConf, &cfg()).unwrap();
        assert!(paths.iter().any(|p| p.solutions == median.final_set));
        if n == 1 {
            assert_eq!(vote.final_set, paths[0].solutions);
            assert_eq!(median.final_set, paths[0].solutions);
        }
        if n == 32 {
            // different seeds give different paths, and the union covers more
            assert!(vote.final_set.len() > paths[0].solutions.len());
        }
        // the transcript replays to the same aggregate
        assert_eq!(aggregate(&t.paths(), Aggregation::Voting).unwrap(), vote);
    }
}

#[test]
fn failed_paths_are_dropped() {
    let item = appendix_ss_item();
    let persona = MockEndpoint::persona(Persona::default());
    let mock = MockEndpoint::from_fn(move |req, call| {
        if call % 4 == 0 {
            return MockReply::Fault(crate::harness::Fault::Http(500));
        }
        MockReply::text(persona.complete(req).unwrap().response.content())
    });
    let (r, t) = self_consistency(&mock, &item, 4, Aggregation::Voting, &cfg()).unwrap();
    assert!(r.n_effective < 4 && r.n_effective > 0);
    assert_eq!(t.status, TranscriptStatus::Complete);

    let dead = MockEndpoint::from_fn(|_, _| MockReply::Fault(crate::harness::Fault::Http(500)));
    assert!(matches!(
        self_consistency(&dead, &item, 3, Aggregation::MedianConf, &cfg()),
        Err(MitigateError::NoPaths)
    ));
}

fn reflective(segment: usize) -> MockEndpoint {
    MockEndpoint::persona(Persona {
        trace_segment_words: segment,
        ..Default::default()
    })
}

#[test]
fn reflection_recall_grows_with_budget() {
    let item = appendix_ss_item();
    let mock = reflective(10);
    let cfg = RunConfig {
        strategy: crate::harness::StrategyConfig {
            checkpoint_tokens: 10,
            ..Default::default()
        },
        ..cfg()
    };
    let series = reflection_budget(&mock, &item, &[0, 1, 2, 3, 4, 6], &cfg).unwrap();
    let recalls: Vec<f64> = series
        .iter()
        .map(|(_, t)| recall(&t.primary().unwrap().solutions, &item.ground_truth).unwrap())
        .collect();
    assert!(recalls.windows(2).all(|w| w[0] <= w[1]), "{recalls:?}");
    assert_eq!(recalls[0], 0.0);
    assert!(*recalls.last().unwrap() > 0.5);

    // checkpoint 0: the forced answer starts from an empty trace
    let zero = &series[0].1;
    assert_eq!(zero.rounds[0].kind, RoundKind::Answer);
    assert_eq!(zero.rounds[0].request[1].content, "<think>\n\n</think>\n\n");
    assert!(zero.rounds[0].continuation);
}

#[test]
fn unbound_checkpoint_matches_plain_run() {
    let item = appendix_ss_item();
    let mock = reflective(10);
    let plain = crate::harness::run_instance(&mock, &item, &cfg())
        .unwrap()
        .primary()
        .unwrap();
    let series = reflection_budget(&mock, &item, &[1000], &cfg()).unwrap();
    let forced = series[0].1.primary().unwrap();
    assert_eq!(forced.solutions, plain.solutions);
    assert_eq!(forced.confidence, plain.confidence);
    assert_eq!(series[0].1.rounds[0].kind, RoundKind::Reflect);
}

#[test]
fn reflection_needs_continuation() {
    let item = appendix_ss_item();
    let mock = reflective(10).with_continuation(false);
    assert!(matches!(
        reflection_budget(&mock, &item, &[1], &cfg()),
        Err(MitigateError::Harness(HarnessError::UnsupportedEndpoint(_)))
    ));
    assert_eq!(mock.calls(), 0);
}

#[test]
fn strategies_run_over_a_corpus() {
    let corpus = small_corpus(4, 8);
    let dir = tempfile::tempdir().unwrap();
    let mock = MockEndpoint::persona(Persona::builtin("reflective").unwrap());
    for (name, kind) in [
        ("sc", Strategy::ScVote),
        ("rf", Strategy::Reflect),
        ("ex", Strategy::Explore),
    ] {
        let mut c = cfg();
        c.strategy.kind = kind;
        c.strategy.n = 3;
        c.strategy.checkpoint_tokens = 16;
        let out = crate::harness::run_benchmark(&mock, &corpus, &c, &dir.path().join(name)).unwrap();
        assert_eq!(out.counts.total(), 4);
        assert_eq!(out.counts.endpoint_failed, 0);
    }
}
