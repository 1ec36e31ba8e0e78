//! Multi-solution reasoning benchmarks with exhaustively enumerated ground
//! truth, a multi-round evaluation harness for chat-completion endpoints, and
//! calibration metrics for measuring how complete a model's answer set is
//! relative to the confidence it reports.

pub mod corpus;
pub mod fsutil;
pub mod harness;
pub mod metrics;
pub mod mitigate;
pub mod oracle;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod selftest;

#[cfg(test)]
mod testutil;

pub use corpus::{BenchmarkItem, Corpus, Instance, TaskKind};
pub use oracle::{Solution, SolutionSet};
