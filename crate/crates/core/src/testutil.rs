//! Fixtures shared by unit tests.

use crate::corpus::{
    self, Band, BenchmarkItem, ComplexityLevel, Corpus, GenConfig, Instance, StrataConfig, SubsetSumInstance, TaskKind,
};
use crate::oracle;

pub const APPENDIX_SS_ANSWER: &str = "[8, 14, 18, 22], [8, 14, 40], [8, 16, 38], [14, 48], [22, 40]";

pub fn item(id: &str, instance: Instance) -> BenchmarkItem {
    let truth = oracle::solve(&instance, &Default::default()).unwrap();
    BenchmarkItem {
        item_id: id.into(),
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

pub fn appendix_ss_item() -> BenchmarkItem {
    item(
        "ss-appendix",
        Instance::SubsetSum(SubsetSumInstance {
            elements: vec![18, 25, 16, 45, 48, 40, 38, 14, 22, 8],
            target: 62,
            seed: 0,
        }),
    )
}

/// SubsetSum corpus with `n` items spread over three small bands.
pub fn small_corpus(n: usize, seed: u64) -> Corpus {
    let mut config = GenConfig::default_for(TaskKind::SubsetSum);
    config.strata = StrataConfig::new([(2, 2), (3, 4), (5, 7)]).unwrap();
    config.quota = n.div_ceil(3);
    let mut corpus = Corpus::build(config, seed).unwrap();
    corpus.items.truncate(n);
    corpus
}
