//! Prompt construction and reply parsing for the multi-round protocol.

mod format;
mod parse;
mod prompts;

pub use format::{render_answer, render_solution, render_solutions};
pub use parse::{
    parse_confidence, parse_recheck, parse_solutions, strip_reasoning, ChangeFlag, ParseOutcome, EMPTY_ANSWER,
};
pub use prompts::{
    build_answer_prompt, build_confidence_prompt, build_explore_prompt, build_recheck_prompt, Message, Paradigm,
    PromptBundle, PromptTemplates, Role, RoundKind, QUESTION_SLOT,
};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("prompt template: {0}")]
    Template(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        self, Band, BenchmarkItem, ComplexityLevel, Instance, ScheduleSolution, SubsetSolution, SubsetSumInstance,
        TaskKind,
    };
    use crate::oracle::{self, SolutionSet};
    use proptest::prelude::*;
    use sha2::{Digest, Sha256};

    fn item(instance: Instance) -> BenchmarkItem {
        let truth = oracle::solve(&instance, &Default::default()).unwrap();
        BenchmarkItem {
            item_id: "x".into(),
            task_kind: instance.kind(),
            question_text: corpus::render_question(&instance),
            level: ComplexityLevel {
                level_index: 0,
                band: Band::new(1, 10_000),
            },
            ground_truth: truth,
            instance,
        }
    }

    fn appendix_tt_item() -> BenchmarkItem {
        let text = "Constraints:\n- Course0 : Time [3, 4], Room [8], Teacher [2]\n- Course1 : Time [0, 4], Room [3], Teacher [2]\n- Course2 : Time [3, 4], Room [0], Teacher [1]\n- Multiple courses cannot be scheduled in the same time slot and room.\n- A teacher can only teach one course at a time.";
        item(corpus::parse_question(text).unwrap())
    }

    fn appendix_ss_item() -> BenchmarkItem {
        item(Instance::SubsetSum(SubsetSumInstance {
            elements: vec![18, 25, 16, 45, 48, 40, 38, 14, 22, 8],
            target: 62,
            seed: 0,
        }))
    }

    const APPENDIX_TT_ANSWER: &str = "Solution 1:
| Course  | Time  | Room  | Teacher  |
|---------|-------|-------|----------|
| Course0 | T3    | R8    | P2       |
| Course1 | T0    | R3    | P2       |
| Course2 | T3    | R0    | P1       |
Solution 2:
| Course  | Time  | Room  | Teacher  |
|---------|-------|-------|----------|
| Course0 | T3    | R8    | P2       |
| Course1 | T0    | R3    | P2       |
| Course2 | T4    | R0    | P1       |
Solution 3:
| Course  | Time  | Room  | Teacher  |
|---------|-------|-------|----------|
| Course0 | T3    | R8    | P2       |
| Course1 | T4    | R3    | P2       |
| Course2 | T4    | R0    | P1       |
Solution 4:
...";

    #[test]
    fn answer_prompts() {
        let tt = appendix_tt_item();
        let long = build_answer_prompt(&tt, Paradigm::LongCot);
        assert!(long.starts_with("You are asked to perform a timetabling task.\n"));
        assert!(long.contains("FIND THE SPECIFIC CONTENT OF EACH SOLUTION"));
        assert!(long.contains("The question is Constraints:\n- Course0 : Time [3, 4], Room [8], Teacher [2]\n"));
        assert!(long.ends_with("actual answer may be different from the examples shown."));
        let short = build_answer_prompt(&tt, Paradigm::ShortCot);
        assert_eq!(short, format!("{long}\nThink step by step before answering."));

        let ss = build_answer_prompt(&appendix_ss_item(), Paradigm::LongCot);
        assert!(ss.starts_with("You are asked to perform a subset-sum \ntask.\nPlease find ALL FEASIBLE SUBSETS"));
        assert!(
            ss.contains("The question is Given the set of unique integers: {18, 25, 16, 45, 48, 40, 38, 14, 22, 8}\n")
        );
        assert!(ss.contains("without using ellipsis, etc.\nThe most important thing"));
    }

    #[test]
    fn template_checksum_is_stable() {
        let digest = |s: &str| hex::encode(Sha256::digest(s.as_bytes()));
        let a = digest(&build_answer_prompt(&appendix_tt_item(), Paradigm::ShortCot));
        let b = digest(&build_answer_prompt(&appendix_tt_item(), Paradigm::ShortCot));
        assert_eq!(a, b);
        assert_eq!(PromptTemplates::default(), PromptTemplates::default());
    }

    #[test]
    fn follow_up_prompts() {
        assert_eq!(
            build_confidence_prompt(),
            "Please rate your confidence in the proposed answer on a scale of 0-100.\nPut your confidence score within [[CONFIDENCE: \\boxed{}]]"
        );
        assert!(build_recheck_prompt().contains("re-output your new answer IN FULL"));
        assert!(build_recheck_prompt().contains("please output \n[[UNCHANGE]]."));
        assert_eq!(build_explore_prompt(), "Wait, there may be other solutions.");
        let bundle = PromptTemplates::default().bundle(&appendix_ss_item(), Paradigm::LongCot);
        assert_eq!(bundle.get(RoundKind::Explore).unwrap().content, build_explore_prompt());
    }

    #[test]
    fn overrides_replace_single_templates() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("explore.txt"), "Keep looking.\n").unwrap();
        let t = PromptTemplates::with_overrides(dir.path()).unwrap();
        assert_eq!(t.explore, "Keep looking.");
        assert_eq!(t.confidence, build_confidence_prompt());
        std::fs::write(dir.path().join("answer_subsetsum.txt"), "no slot").unwrap();
        assert!(PromptTemplates::with_overrides(dir.path()).is_err());
    }

    #[test]
    fn appendix_timetabling_answer_parses() {
        let out = parse_solutions(APPENDIX_TT_ANSWER, TaskKind::TimeTabling);
        assert_eq!(out.solutions.len(), 3);
        let first = ScheduleSolution::from_triples([(0, 3, 8, 2), (1, 0, 3, 2), (2, 3, 0, 1)]);
        assert_eq!(out.solutions.as_slice()[0], first.into());
        assert!(out.diagnostics.iter().any(|d| d.starts_with("Solution 4: skipped")));
        let truth = appendix_tt_item().ground_truth;
        assert!(out.solutions.is_subset(&truth));
    }

    #[test]
    fn subset_formats() {
        let out = parse_solutions("Solution 1: {22, 40}\nSolution 2: {14, 48}", TaskKind::SubsetSum);
        let want = SolutionSet::from_solutions(
            TaskKind::SubsetSum,
            [SubsetSolution::new(vec![22, 40]), SubsetSolution::new(vec![14, 48])],
        )
        .unwrap();
        assert_eq!(out.solutions, want);

        let bare = parse_solutions(
            "[8, 14, 18, 22], [8, 14, 40], [8, 16, 38], [14, 48], [22, 40]",
            TaskKind::SubsetSum,
        );
        assert_eq!(bare.solutions, appendix_ss_item().ground_truth);

        let dup = parse_solutions("Solution 1: {22, 40}\nSolution 2: {40, 22}", TaskKind::SubsetSum);
        assert_eq!(dup.solutions.len(), 1);

        let bold = parse_solutions(
            "**Solution 1:** \\{22, 40\\}\n**Solution 2**: [14,48]",
            TaskKind::SubsetSum,
        );
        assert_eq!(bold.solutions, want);
    }

    #[test]
    fn malformed_blocks_are_skipped_not_fatal() {
        let text = "Solution 1: {22, forty}\nSolution 2: {14, 48}\nSolution 3: none";
        let out = parse_solutions(text, TaskKind::SubsetSum);
        assert_eq!(out.solutions.len(), 1);
        assert_eq!(out.diagnostics.len(), 2);

        let tt = "Solution 1:\n| Course0 | T3 | Room8 | P2 |\nSolution 2:\n| Course0 | 3 | 8 | 2 |";
        let out = parse_solutions(tt, TaskKind::TimeTabling);
        assert_eq!(out.solutions.len(), 1);
        assert!(out.diagnostics[0].contains("room"));

        let empty = parse_solutions("I could not find anything.", TaskKind::SubsetSum);
        assert!(empty.is_empty_answer());
        assert!(empty.diagnostics.iter().any(|d| d == EMPTY_ANSWER));
    }

    #[test]
    fn invalid_but_wellformed_answers_survive() {
        // wrong teacher and a room clash are still parsed
        let text = "Solution 1:\n| Course0 | T3 | R8 | P0 |\n| Course1 | T3 | R8 | P2 |";
        let out = parse_solutions(text, TaskKind::TimeTabling);
        assert_eq!(out.solutions.len(), 1);
        assert!(!appendix_tt_item().ground_truth.contains(&out.solutions.as_slice()[0]));
    }

    #[test]
    fn reasoning_trace_is_ignored() {
        let text = "<think>maybe Solution 1: {1, 2}</think>\nSolution 1: {22, 40}";
        let out = parse_solutions(text, TaskKind::SubsetSum);
        assert_eq!(out.solutions.len(), 1);
        assert_eq!(out.solutions.as_slice()[0].as_subset().unwrap().members, vec![22, 40]);
        assert_eq!(strip_reasoning("half a trace</think>answer"), "answer");
        assert_eq!(strip_reasoning("answer<think>cut off"), "answer");
    }

    #[test]
    fn headerless_tables() {
        let text = "| Course | Time | Room | Teacher |\n|---|---|---|---|\n| Course0 | T3 | R8 | P2 |\n\n| Course | Time | Room | Teacher |\n|---|---|---|---|\n| Course0 | T4 | R8 | P2 |\n";
        let out = parse_solutions(text, TaskKind::TimeTabling);
        assert_eq!(out.solutions.len(), 2);
    }

    #[test]
    fn confidence_parsing() {
        assert_eq!(parse_confidence("[[CONFIDENCE: \\boxed{85}]]").0, Some(85));
        assert_eq!(parse_confidence("I'd say [[CONFIDENCE: \\boxed{ 70% }]]").0, Some(70));
        let (v, d) = parse_confidence("no marker here");
        assert_eq!(v, None);
        assert!(!d.is_empty());
        let (v, d) = parse_confidence("\\boxed{150}");
        assert_eq!(v, None);
        assert!(d.iter().any(|x| x.contains("out of range")));
        assert_eq!(
            parse_confidence("My confidence level is about 60 out of 100").0,
            Some(60)
        );
        assert_eq!(
            parse_confidence(&("Confidence: ".to_owned() + &"x".repeat(60) + " 60")).0,
            None
        );
        assert_eq!(
            parse_confidence("<think>[[CONFIDENCE: \\boxed{10}]]</think>[[CONFIDENCE: \\boxed{90}]]").0,
            Some(90)
        );
    }

    #[test]
    fn recheck_parsing() {
        let prev = appendix_ss_item().ground_truth;
        let kept = parse_recheck("[[UNCHANGE]]", &prev);
        assert_eq!(kept.change_flag, Some(ChangeFlag::Unchange));
        assert_eq!(kept.solutions, prev);

        let changed = parse_recheck("[[CHANGE]] Solution 1: {14,48}", &prev);
        assert_eq!(changed.change_flag, Some(ChangeFlag::Change));
        assert_eq!(changed.solutions.len(), 1);
        assert_eq!(
            changed.solutions.as_slice()[0].as_subset().unwrap().members,
            vec![14, 48]
        );

        let inferred = parse_recheck("Solution 1: {14, 48}\nSolution 2: {22, 40}", &prev);
        assert_eq!(inferred.change_flag, Some(ChangeFlag::Change));
        assert_eq!(inferred.solutions.len(), 2);
        assert!(inferred.diagnostics.iter().any(|d| d.contains("no change marker")));

        let nothing = parse_recheck("Looks fine to me.", &prev);
        assert_eq!(nothing.change_flag, Some(ChangeFlag::Unchange));
        assert_eq!(nothing.solutions, prev);
    }

    fn arb_item() -> impl Strategy<Value = BenchmarkItem> {
        (any::<u64>(), any::<bool>()).prop_map(|(seed, tt)| {
            let inst: Instance = if tt {
                corpus::gen_timetabling(&Default::default(), seed).unwrap().into()
            } else {
                corpus::gen_subsetsum(&Default::default(), seed).unwrap().into()
            };
            item(inst)
        })
    }

    proptest! {
        #[test]
        fn rendered_answers_roundtrip(item in arb_item(), keep in prop::collection::vec(any::<bool>(), 64)) {
            let subset: Vec<_> = item.ground_truth.iter().enumerate()
                .filter(|(i, _)| keep[i % keep.len()]).map(|(_, s)| s.clone()).collect();
            let injected = SolutionSet::from_solutions(item.task_kind, subset).unwrap();
            let reply = format!("Here is my answer.\n{}", render_answer(&injected));
            let parsed = parse_solutions(&reply, item.task_kind);
            prop_assert_eq!(parsed.solutions, injected);
        }
    }
}
