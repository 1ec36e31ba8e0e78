//! One item's conversation: querying with retries, journaling and replay.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use super::client::ChatClient;
use super::config::RunConfig;
use super::journal::Journal;
use super::transcript::{Round, Transcript, TranscriptStatus};
use super::wire::ChatRequest;
use crate::corpus::BenchmarkItem;
use crate::oracle::SolutionSet;
use crate::protocol::{
    parse_confidence, parse_recheck, parse_solutions, Message, ParseOutcome, PromptTemplates, RoundKind,
};
use crate::rng::derive_seed;

/// The run was cancelled before the conversation finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cancelled;

pub(crate) struct RoundSpec {
    pub kind: RoundKind,
    pub path: Option<u32>,
    pub checkpoint: Option<u32>,
    pub budget_tokens: Option<u32>,
    pub messages: Vec<Message>,
    pub continuation: bool,
}

impl RoundSpec {
    pub fn new(kind: RoundKind, messages: Vec<Message>) -> Self {
        Self {
            kind,
            path: None,
            checkpoint: None,
            budget_tokens: None,
            messages,
            continuation: false,
        }
    }

    pub fn path(mut self, path: Option<u32>) -> Self {
        self.path = path;
        self
    }

    pub fn checkpoint(mut self, checkpoint: Option<u32>) -> Self {
        self.checkpoint = checkpoint;
        self
    }
}

/// Counters shared by all sessions of a run.
#[derive(Debug, Default)]
pub struct SessionStats {
    pub queried: AtomicUsize,
    pub replayed: AtomicUsize,
}

pub(crate) struct Session<'a> {
    pub client: &'a dyn ChatClient,
    pub config: &'a RunConfig,
    pub templates: &'a PromptTemplates,
    pub item: &'a BenchmarkItem,
    pub transcript: Transcript,
    replay: VecDeque<Round>,
    journal: Option<&'a Journal>,
    cancel: Option<&'a AtomicBool>,
    stats: Option<&'a SessionStats>,
}

/// Per-conversation seed sent with every request, so sampling endpoints
/// (and the mock) can vary between self-consistency paths.
pub fn conversation_seed(run_seed: u64, item_id: &str, path: Option<u32>) -> u64 {
    let digest = Sha256::digest(item_id.as_bytes());
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    let stream = u64::from_le_bytes(word) ^ path.map_or(0, |p| u64::from(p) + 1).rotate_left(48);
    derive_seed(run_seed, stream)
}

impl<'a> Session<'a> {
    pub fn new(
        client: &'a dyn ChatClient,
        config: &'a RunConfig,
        templates: &'a PromptTemplates,
        item: &'a BenchmarkItem,
    ) -> Self {
        Self {
            client,
            config,
            templates,
            item,
            transcript: Transcript::new(&item.item_id, item.task_kind, config.paradigm, config.strategy.kind),
            replay: VecDeque::new(),
            journal: None,
            cancel: None,
            stats: None,
        }
    }

    pub fn with_transcript(mut self, transcript: Transcript) -> Self {
        self.transcript = transcript;
        self
    }

    pub fn with_journal(mut self, journal: &'a Journal, replay: Vec<Round>) -> Self {
        self.journal = Some(journal);
        self.replay = replay.into();
        self
    }

    pub fn with_control(mut self, cancel: &'a AtomicBool, stats: &'a SessionStats) -> Self {
        self.cancel = Some(cancel);
        self.stats = Some(stats);
        self
    }

    fn next_seq(&self) -> u32 {
        self.transcript.rounds.len() as u32
    }

    fn take_replay(&mut self, spec: &RoundSpec) -> Option<Round> {
        let seq = self.next_seq();
        let front = self.replay.front()?;
        let same = front.seq == seq
            && front.kind == spec.kind
            && front.path == spec.path
            && front.checkpoint == spec.checkpoint
            && front.request == spec.messages;
        if same {
            self.replay.pop_front()
        } else {
            // the journal no longer describes this conversation
            self.replay.clear();
            None
        }
    }

    /// Runs one round. `Ok(None)` means the endpoint failed after retries;
    /// the failed round is still recorded and the transcript is marked.
    pub fn query(
        &mut self,
        spec: RoundSpec,
        max_tokens: u32,
        parse: impl FnOnce(&str) -> ParseOutcome,
    ) -> Result<Option<Round>, Cancelled> {
        if let Some(round) = self.take_replay(&spec) {
            if let Some(stats) = self.stats {
                stats.replayed.fetch_add(1, Ordering::Relaxed);
            }
            self.transcript.rounds.push(round.clone());
            return Ok(Some(round));
        }
        let request = ChatRequest {
            model: self.config.model.clone(),
            messages: spec.messages.clone(),
            temperature: self.config.temperature,
            max_completion_tokens: max_tokens,
            seed: Some(conversation_seed(self.config.seed, &self.item.item_id, spec.path)),
            continue_final_message: spec.continuation.then_some(true),
            add_generation_prompt: spec.continuation.then_some(false),
        };
        let retry = self.config.retry;
        let mut attempts = 0;
        let outcome = loop {
            if self.cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
                return Err(Cancelled);
            }
            attempts += 1;
            if let Some(stats) = self.stats {
                stats.queried.fetch_add(1, Ordering::Relaxed);
            }
            match self.client.complete(&request) {
                Ok(done) => break Ok(done),
                Err(e) if e.is_retriable() && attempts <= retry.max_retries => {
                    std::thread::sleep(retry.delay(attempts));
                }
                Err(e) => break Err(e),
            }
        };
        let round = match outcome {
            Ok(done) => {
                let content = done.response.content().to_owned();
                Round {
                    seq: self.next_seq(),
                    kind: spec.kind,
                    path: spec.path,
                    checkpoint: spec.checkpoint,
                    budget_tokens: spec.budget_tokens,
                    request: spec.messages,
                    continuation: spec.continuation,
                    parse: Some(parse(&content)),
                    response: Some(content),
                    reasoning: done.response.reasoning().map(str::to_owned),
                    finish_reason: done.response.finish_reason().map(str::to_owned),
                    latency_ms: done.latency_ms,
                    usage: done.response.usage,
                    attempts,
                    error: None,
                }
            }
            Err(e) => Round {
                seq: self.next_seq(),
                kind: spec.kind,
                path: spec.path,
                checkpoint: spec.checkpoint,
                budget_tokens: spec.budget_tokens,
                request: spec.messages,
                continuation: spec.continuation,
                response: None,
                reasoning: None,
                finish_reason: None,
                parse: None,
                latency_ms: 0,
                usage: None,
                attempts,
                error: Some(e.to_string()),
            },
        };
        if round.succeeded() {
            if let Some(journal) = self.journal {
                journal.append_round(&self.item.item_id, &round);
            }
        } else {
            self.transcript.status = TranscriptStatus::EndpointFailed;
        }
        self.transcript.rounds.push(round.clone());
        Ok(round.succeeded().then_some(round))
    }

    fn default_tokens(&self) -> u32 {
        self.config.max_completion_tokens
    }

    /// Answer round on a fresh conversation; returns the history and the
    /// parsed answer on success.
    pub fn answer(&mut self, path: Option<u32>) -> Result<Option<(Vec<Message>, SolutionSet)>, Cancelled> {
        let kind = self.item.task_kind;
        let mut history = vec![Message::user(
            self.templates.answer_prompt(self.item, self.config.paradigm),
        )];
        let spec = RoundSpec::new(RoundKind::Answer, history.clone()).path(path);
        let Some(round) = self.query(spec, self.default_tokens(), |t| parse_solutions(t, kind))? else {
            return Ok(None);
        };
        history.push(Message::assistant(round.response.unwrap_or_default()));
        Ok(Some((
            history,
            round
                .parse
                .map(|p| p.solutions)
                .unwrap_or_else(|| SolutionSet::new(kind)),
        )))
    }

    /// Confidence round with one re-ask when no score comes back.
    pub fn confidence(
        &mut self,
        history: &mut Vec<Message>,
        path: Option<u32>,
        checkpoint: Option<u32>,
    ) -> Result<bool, Cancelled> {
        let kind = self.item.task_kind;
        for _ in 0..2 {
            history.push(Message::user(self.templates.confidence.clone()));
            let spec = RoundSpec::new(RoundKind::Confidence, history.clone())
                .path(path)
                .checkpoint(checkpoint);
            let Some(round) = self.query(spec, self.default_tokens(), |t| {
                let (confidence, diagnostics) = parse_confidence(t);
                ParseOutcome {
                    confidence,
                    diagnostics,
                    ..ParseOutcome::empty(kind)
                }
            })?
            else {
                return Ok(false);
            };
            history.push(Message::assistant(round.response.unwrap_or_default()));
            if round.parse.is_some_and(|p| p.confidence.is_some()) {
                break;
            }
        }
        Ok(true)
    }

    /// A follow-up round whose reply restates or keeps the current answer.
    pub fn follow_up(
        &mut self,
        kind: RoundKind,
        prompt: String,
        history: &mut Vec<Message>,
        current: &SolutionSet,
    ) -> Result<Option<SolutionSet>, Cancelled> {
        history.push(Message::user(prompt));
        let spec = RoundSpec::new(kind, history.clone());
        let Some(round) = self.query(spec, self.default_tokens(), |t| parse_recheck(t, current))? else {
            return Ok(None);
        };
        history.push(Message::assistant(round.response.unwrap_or_default()));
        Ok(round.parse.map(|p| p.solutions))
    }

    /// Sets the terminal status once the flow is over.
    pub fn finish(mut self) -> Transcript {
        if self.transcript.status != TranscriptStatus::EndpointFailed {
            let empty = self.transcript.primary().is_none_or(|s| s.solutions.is_empty());
            if empty {
                self.transcript.status = TranscriptStatus::ParseEmpty;
            }
        }
        self.transcript
    }
}
