//! Benchmark instances: domain types, seeded generation, question rendering
//! and solution-count stratification.

mod build;
mod file;
mod generate;
mod render;
mod types;

pub use build::{assign_level, build_benchmark, BuildOptions};
pub use file::{Corpus, GenConfig, CORPUS_SCHEMA_VERSION};
pub use generate::{
    gen_subsetsum, gen_timetabling, CountRange, GenParams, SubsetSumParams, TimeTablingParams, ValueRange,
};
pub use render::{parse_question, render_question, render_subsetsum, render_timetabling};
pub use types::{
    Assignment, Band, BenchmarkItem, ComplexityLevel, CourseSpec, Instance, ScheduleSolution, StrataConfig,
    SubsetSolution, SubsetSumInstance, TaskKind, TimeTablingInstance,
};

use crate::oracle::OracleError;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("solution count {count} lies outside every complexity band")]
    OutOfStrata { count: usize },
    #[error(
        "corpus incomplete after {attempts} attempts (quota {quota}); unfilled levels (level, filled): {unfilled:?}"
    )]
    PartialCorpus {
        attempts: u64,
        quota: usize,
        unfilled: Vec<(usize, usize)>,
    },
    #[error("corpus integrity: {0}")]
    Integrity(String),
    #[error("corpus schema: {0}")]
    Schema(String),
    #[error("oracle failure: {0}")]
    Oracle(Box<OracleError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
