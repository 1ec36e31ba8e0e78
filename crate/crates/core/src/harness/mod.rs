//! Drives a chat endpoint through the question, confidence, recheck and
//! exploration rounds, and persists resumable run directories.
//!
//! A run directory holds `run.json` (resolved configuration, seed and corpus
//! hash), `transcripts.jsonl` (one finished transcript per line) and
//! `journal.log` (every completed round, for resuming interrupted items).

mod client;
mod config;
mod journal;
mod mock;
mod run;
pub(crate) mod session;
mod transcript;
pub mod wire;

pub use client::{ChatClient, Completion, EndpointConfig, EndpointError, HttpChatClient};
pub use config::{RetryPolicy, RoundPlan, RunConfig, Strategy, StrategyConfig};
pub use journal::{read_jsonl, repair_jsonl, JournalEntry, JsonlAppender};
pub use mock::{Fault, MockEndpoint, MockReply, Persona, BUILTIN_PERSONAS};
pub use run::{
    load_transcripts, run_benchmark, run_benchmark_with, run_instance, run_temperature_sweep, temperature_dir,
    RunControl, RunMeta, RunOutcome, RunStatus, StatusCounts, JOURNAL_FILE, RUN_FILE, TRANSCRIPTS_FILE,
};
pub use session::{conversation_seed, Cancelled};
pub use transcript::{LengthUnit, Round, StageAnswer, Transcript, TranscriptStatus};

pub(crate) use run::execute;

use crate::corpus::CorpusError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("run configuration: {0}")]
    Config(String),
    #[error("unsupported endpoint: {0}")]
    UnsupportedEndpoint(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("run directory mismatch: {0}")]
    Mismatch(String),
    #[error("journal: {0}")]
    Journal(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
