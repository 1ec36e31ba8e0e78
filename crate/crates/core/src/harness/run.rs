//! Running items and whole corpora.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::ChatClient;
use super::config::{RunConfig, Strategy};
use super::journal::{read_jsonl, repair_jsonl, Journal, JournalEntry, JsonlAppender};
use super::session::{Cancelled, Session, SessionStats};
use super::transcript::{Round, Transcript, TranscriptStatus};
use super::HarnessError;
use crate::corpus::{BenchmarkItem, Corpus, TaskKind};
use crate::fsutil::{write_atomic, write_json_atomic};
use crate::mitigate;
use crate::protocol::RoundKind;

pub const RUN_FILE: &str = "run.json";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const JOURNAL_FILE: &str = "journal.log";

pub(crate) fn execute(session: &mut Session<'_>) -> Result<(), Cancelled> {
    let strategy = session.config.strategy.clone();
    match strategy.kind {
        Strategy::None | Strategy::Explore => standard(session),
        Strategy::ScMedian | Strategy::ScVote => mitigate::run_paths(session, strategy.n),
        Strategy::Reflect => mitigate::run_checkpoints(session, &strategy.checkpoints, strategy.checkpoint_tokens),
    }
}

fn standard(session: &mut Session<'_>) -> Result<(), Cancelled> {
    let Some((mut history, mut current)) = session.answer(None)? else {
        return Ok(());
    };
    if !session.confidence(&mut history, None, None)? {
        return Ok(());
    }
    if session.config.plan.recheck {
        let prompt = session.templates.recheck.clone();
        match session.follow_up(RoundKind::Recheck, prompt, &mut history, &current)? {
            Some(set) => current = set,
            None => return Ok(()),
        }
    }
    if session.config.plan.explore || session.config.strategy.kind == Strategy::Explore {
        mitigate::explore_rounds(session, &mut history, &current)?;
    }
    Ok(())
}

/// Runs the configured protocol on one item.
pub fn run_instance(
    client: &dyn ChatClient,
    item: &BenchmarkItem,
    config: &RunConfig,
) -> Result<Transcript, HarnessError> {
    config.validate_for(client.supports_continuation())?;
    let templates = config.templates()?;
    let mut session = Session::new(client, config, &templates, item);
    execute(&mut session).expect("no cancellation without a control");
    Ok(session.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Interrupted,
    Complete,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub complete: usize,
    pub parse_empty: usize,
    pub endpoint_failed: usize,
}

impl StatusCounts {
    pub fn of<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> Self {
        let mut c = Self::default();
        for t in transcripts {
            match t.status {
                TranscriptStatus::Complete => c.complete += 1,
                TranscriptStatus::ParseEmpty => c.parse_empty += 1,
                TranscriptStatus::EndpointFailed => c.endpoint_failed += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.complete + self.parse_empty + self.endpoint_failed
    }
}

/// `run.json`: the resolved configuration and the corpus it ran against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub status: RunStatus,
    pub corpus_hash: String,
    pub task_kind: TaskKind,
    pub corpus_items: usize,
    pub seed: u64,
    pub templates_sha256: String,
    pub config: RunConfig,
    pub counts: StatusCounts,
}

impl RunMeta {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(RUN_FILE);
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Journal(format!("{}: {e}", path.display())))
    }
}

/// Reads the transcripts of a run directory.
pub fn load_transcripts(dir: &Path) -> Result<Vec<Transcript>, HarnessError> {
    read_jsonl(&dir.join(TRANSCRIPTS_FILE))
}

/// External control over a running benchmark.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    pub cancel: Arc<AtomicBool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub counts: StatusCounts,
    /// Requests sent to the endpoint in this invocation, retries included.
    pub queried: usize,
    /// Rounds restored from the journal instead of being queried.
    pub replayed: usize,
}

pub fn run_benchmark(
    client: &dyn ChatClient,
    corpus: &Corpus,
    config: &RunConfig,
    out: &Path,
) -> Result<RunOutcome, HarnessError> {
    run_benchmark_with(client, corpus, config, out, &RunControl::default())
}

fn templates_digest(t: &crate::protocol::PromptTemplates) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(t).expect("templates serialise")))
}

/// Runs every item of `corpus`, resuming whatever `out` already holds.
pub fn run_benchmark_with(
    client: &dyn ChatClient,
    corpus: &Corpus,
    config: &RunConfig,
    out: &Path,
    control: &RunControl,
) -> Result<RunOutcome, HarnessError> {
    corpus.validate()?;
    config.validate_for(client.supports_continuation())?;
    let templates = config.templates()?;
    std::fs::create_dir_all(out)?;

    let corpus_hash = corpus.content_hash();
    let mut meta = RunMeta {
        schema_version: 1,
        status: RunStatus::Running,
        corpus_hash: corpus_hash.clone(),
        task_kind: corpus.task_kind,
        corpus_items: corpus.items.len(),
        seed: config.seed,
        templates_sha256: templates_digest(&templates),
        config: config.clone(),
        counts: StatusCounts::default(),
    };
    if out.join(RUN_FILE).exists() {
        let previous = RunMeta::load(out)?;
        if previous.corpus_hash != corpus_hash {
            return Err(HarnessError::Mismatch(
                "run directory belongs to a different corpus".into(),
            ));
        }
        if previous.config.resume_key() != config.resume_key() || previous.templates_sha256 != meta.templates_sha256 {
            return Err(HarnessError::Mismatch(
                "run directory was started with a different configuration".into(),
            ));
        }
    }
    write_json_atomic(&out.join(RUN_FILE), &meta)?;

    let transcripts_path = out.join(TRANSCRIPTS_FILE);
    let journal_path = out.join(JOURNAL_FILE);
    let ids: HashSet<&str> = corpus.items.iter().map(|i| i.item_id.as_str()).collect();
    let mut finished: BTreeMap<String, Transcript> = BTreeMap::new();
    for t in repair_jsonl::<Transcript>(&transcripts_path)? {
        if ids.contains(t.item_id.as_str()) {
            finished.insert(t.item_id.clone(), t);
        }
    }
    // items that ran out of retries are attempted again
    finished.retain(|_, t| t.status != TranscriptStatus::EndpointFailed);
    let mut replay: HashMap<String, Vec<Round>> = HashMap::new();
    for entry in repair_jsonl::<JournalEntry>(&journal_path)? {
        if !finished.contains_key(&entry.item_id) {
            replay.entry(entry.item_id).or_default().push(entry.round);
        }
    }
    for rounds in replay.values_mut() {
        rounds.sort_by_key(|r| r.seq);
    }

    let appender = JsonlAppender::open(&transcripts_path)?;
    let journal = Journal::open(&journal_path)?;
    let pending: Vec<&BenchmarkItem> = corpus
        .items
        .iter()
        .filter(|i| !finished.contains_key(&i.item_id))
        .collect();
    let next = AtomicUsize::new(0);
    let stats = SessionStats::default();
    let fresh: Mutex<Vec<Transcript>> = Mutex::new(Vec::new());
    let write_error: Mutex<Option<std::io::Error>> = Mutex::new(None);
    let replay = Mutex::new(replay);

    std::thread::scope(|scope| {
        for _ in 0..config.parallelism.min(pending.len().max(1)) {
            scope.spawn(|| loop {
                if control.cancel.load(Ordering::SeqCst) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = pending.get(index) else { break };
                let rounds = replay.lock().unwrap().remove(&item.item_id).unwrap_or_default();
                let mut session = Session::new(client, config, &templates, item)
                    .with_journal(&journal, rounds)
                    .with_control(&control.cancel, &stats);
                if execute(&mut session).is_err() {
                    break;
                }
                let transcript = session.finish();
                if let Err(e) = appender.append(&transcript) {
                    write_error.lock().unwrap().get_or_insert(e);
                    control.cancel.store(true, Ordering::SeqCst);
                    break;
                }
                fresh.lock().unwrap().push(transcript);
            });
        }
    });

    if let Some(e) = write_error.into_inner().unwrap().or_else(|| journal.take_error()) {
        return Err(e.into());
    }
    for t in fresh.into_inner().unwrap() {
        finished.insert(t.item_id.clone(), t);
    }
    meta.counts = StatusCounts::of(finished.values());
    let complete = finished.len() == corpus.items.len();
    if complete {
        let mut body = Vec::new();
        for t in finished.values() {
            body.extend(serde_json::to_vec(t).map_err(std::io::Error::other)?);
            body.push(b'\n');
        }
        write_atomic(&transcripts_path, &body)?;
        compact_journal(&journal_path)?;
        meta.status = RunStatus::Complete;
    } else {
        meta.status = RunStatus::Interrupted;
    }
    write_json_atomic(&out.join(RUN_FILE), &meta)?;
    Ok(RunOutcome {
        dir: out.to_path_buf(),
        status: meta.status,
        counts: meta.counts,
        queried: stats.queried.load(Ordering::SeqCst),
        replayed: stats.replayed.load(Ordering::SeqCst),
    })
}

/// Rewrites the journal in (item, round) order so finished runs are
/// byte-identical regardless of scheduling.
fn compact_journal(path: &Path) -> Result<(), HarnessError> {
    let mut entries: BTreeMap<(String, u32), JournalEntry> = BTreeMap::new();
    for e in read_jsonl::<JournalEntry>(path)? {
        entries.insert((e.item_id.clone(), e.round.seq), e);
    }
    let mut body = Vec::new();
    for e in entries.values() {
        body.extend(serde_json::to_vec(e).map_err(std::io::Error::other)?);
        body.push(b'\n');
    }
    write_atomic(path, &body)?;
    Ok(())
}

/// Directory name used for one temperature of a sweep.
pub fn temperature_dir(temperature: f64) -> String {
    format!("temp-{temperature:.2}")
}

/// One run directory per temperature under `out_root`.
pub fn run_temperature_sweep(
    client: &dyn ChatClient,
    corpus: &Corpus,
    config: &RunConfig,
    temperatures: &[f64],
    out_root: &Path,
    control: &RunControl,
) -> Result<Vec<(f64, RunOutcome)>, HarnessError> {
    let mut outcomes = Vec::new();
    for &t in temperatures {
        let cfg = RunConfig {
            temperature: t,
            ..config.clone()
        };
        cfg.validate()?;
        let outcome = run_benchmark_with(client, corpus, &cfg, &out_root.join(temperature_dir(t)), control)?;
        let stop = outcome.status != RunStatus::Complete;
        outcomes.push((t, outcome));
        if stop {
            break;
        }
    }
    Ok(outcomes)
}
