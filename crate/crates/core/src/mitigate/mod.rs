//! Mitigation strategies: a follow-up exploration cue, self-consistency
//! over independent paths, and reasoning cut at token checkpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::BenchmarkItem;
use crate::harness::session::{Cancelled, RoundSpec, Session};
use crate::harness::{execute, ChatClient, HarnessError, RunConfig, Strategy, Transcript, TranscriptStatus};
use crate::oracle::{Solution, SolutionSet};
use crate::protocol::{parse_solutions, Message, RoundKind};

#[derive(Debug, thiserror::Error)]
pub enum MitigateError {
    #[error("every self-consistency path failed")]
    NoPaths,
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    MedianConf,
    Voting,
}

/// One settled self-consistency path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub path: u32,
    pub solutions: SolutionSet,
    /// 0–100 verbal confidence.
    pub confidence: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSupport {
    pub solution: Solution,
    /// Share of paths that contain the answer.
    pub support: f64,
    /// Mean 0–100 confidence of those paths.
    pub mean_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedResult {
    pub strategy: Aggregation,
    pub final_set: SolutionSet,
    /// Fraction in [0, 1].
    pub final_confidence: Option<f64>,
    pub n_effective: usize,
    /// The path returned by median selection.
    pub selected_path: Option<u32>,
    /// Per-answer support, voting only.
    pub support: Vec<AnswerSupport>,
    pub paths: Vec<PathResult>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Combines settled paths. Pure, so it can be replayed from transcripts.
///
/// Median selection sorts paths with a confidence by (confidence, path)
/// and takes the lower median; when no path reported a confidence the first
/// path is used. Voting returns the union, with confidence
/// `Σ support·mean_conf / Σ support` over answers whose paths reported one,
/// falling back to the mean path confidence when the union is empty.
pub fn aggregate(paths: &[PathResult], strategy: Aggregation) -> Result<AggregatedResult, MitigateError> {
    let first = paths.first().ok_or(MitigateError::NoPaths)?;
    let n = paths.len();
    let mut result = AggregatedResult {
        strategy,
        final_set: SolutionSet::new(first.solutions.kind()),
        final_confidence: None,
        n_effective: n,
        selected_path: None,
        support: Vec::new(),
        paths: paths.to_vec(),
    };
    match strategy {
        Aggregation::MedianConf => {
            let mut rated: Vec<&PathResult> = paths.iter().filter(|p| p.confidence.is_some()).collect();
            rated.sort_by_key(|p| (p.confidence, p.path));
            let chosen = if rated.is_empty() {
                first
            } else {
                rated[(rated.len() - 1) / 2]
            };
            result.final_set = chosen.solutions.clone();
            result.final_confidence = chosen.confidence.map(|c| f64::from(c) / 100.0);
            result.selected_path = Some(chosen.path);
        }
        Aggregation::Voting => {
            let mut tally: BTreeMap<&Solution, (usize, Vec<f64>)> = BTreeMap::new();
            for p in paths {
                for s in p.solutions.iter() {
                    let entry = tally.entry(s).or_default();
                    entry.0 += 1;
                    if let Some(c) = p.confidence {
                        entry.1.push(f64::from(c));
                    }
                }
            }
            let (mut num, mut den) = (0.0, 0.0);
            for (solution, (count, confs)) in tally {
                let support = count as f64 / n as f64;
                let mean_confidence = mean(confs);
                if let Some(c) = mean_confidence {
                    num += support * c;
                    den += support;
                }
                result.support.push(AnswerSupport {
                    solution: solution.clone(),
                    support,
                    mean_confidence,
                });
            }
            result.final_set = SolutionSet::from_solutions(
                first.solutions.kind(),
                result.support.iter().map(|a| a.solution.clone()),
            )
            .expect("paths share a task kind");
            result.final_confidence = if den > 0.0 {
                Some(num / den / 100.0)
            } else {
                mean(paths.iter().filter_map(|p| p.confidence).map(f64::from)).map(|c| c / 100.0)
            };
        }
    }
    Ok(result)
}

/// Exploration cue, re-parse, then a fresh confidence round.
pub(crate) fn explore_rounds(
    session: &mut Session<'_>,
    history: &mut Vec<Message>,
    current: &SolutionSet,
) -> Result<(), Cancelled> {
    let prompt = session.templates.explore.clone();
    if session
        .follow_up(RoundKind::Explore, prompt, history, current)?
        .is_some()
    {
        session.confidence(history, None, None)?;
    }
    Ok(())
}

pub(crate) fn run_paths(session: &mut Session<'_>, n: u32) -> Result<(), Cancelled> {
    for p in 0..n {
        if let Some((mut history, _)) = session.answer(Some(p))? {
            session.confidence(&mut history, Some(p), None)?;
        }
    }
    session.transcript.status = if session.transcript.paths().is_empty() {
        TranscriptStatus::EndpointFailed
    } else {
        TranscriptStatus::Complete
    };
    Ok(())
}

/// Prefix that closes a (possibly empty) reasoning trace so the endpoint
/// continues with the final answer.
pub fn forced_answer_prefix(trace: &str) -> String {
    format!("<think>\n{}\n</think>\n\n", trace.trim())
}

fn trace_text(reasoning: Option<&str>, content: &str) -> String {
    let raw = reasoning.filter(|r| !r.trim().is_empty()).unwrap_or(content);
    let raw = raw.trim_start();
    let raw = raw.strip_prefix("<think>").unwrap_or(raw);
    raw.split("</think>").next().unwrap_or("").to_owned()
}

pub(crate) fn run_checkpoints(session: &mut Session<'_>, checkpoints: &[u32], unit: u32) -> Result<(), Cancelled> {
    let kind = session.item.task_kind;
    let question = Message::user(session.templates.answer_prompt(session.item, session.config.paradigm));
    let max_tokens = session.config.max_completion_tokens;
    for &c in checkpoints {
        let budget = c.saturating_mul(unit);
        let mut trace = String::new();
        if budget > 0 {
            let mut spec = RoundSpec::new(RoundKind::Reflect, vec![question.clone()]).checkpoint(Some(c));
            spec.budget_tokens = Some(budget);
            let Some(round) = session.query(spec, budget.min(max_tokens), |t| parse_solutions(t, kind))? else {
                continue;
            };
            let content = round.response.unwrap_or_default();
            if round.finish_reason.as_deref() != Some("length") {
                let mut history = vec![question.clone(), Message::assistant(content)];
                session.confidence(&mut history, None, Some(c))?;
                continue;
            }
            trace = trace_text(round.reasoning.as_deref(), &content);
        }
        let prefix = forced_answer_prefix(&trace);
        let mut spec = RoundSpec::new(
            RoundKind::Answer,
            vec![question.clone(), Message::assistant(prefix.clone())],
        )
        .checkpoint(Some(c));
        spec.budget_tokens = Some(budget);
        spec.continuation = true;
        let Some(round) = session.query(spec, max_tokens, |t| parse_solutions(t, kind))? else {
            continue;
        };
        let mut history = vec![
            question.clone(),
            Message::assistant(prefix + round.response.as_deref().unwrap_or("")),
        ];
        session.confidence(&mut history, None, Some(c))?;
    }
    Ok(())
}

fn strategy_config(config: &RunConfig, kind: Strategy) -> RunConfig {
    let mut cfg = config.clone();
    cfg.strategy.kind = kind;
    cfg
}

/// Appends the exploration cue to a finished conversation.
pub fn sequential_explore(
    client: &dyn ChatClient,
    item: &BenchmarkItem,
    transcript: &Transcript,
    config: &RunConfig,
) -> Result<Transcript, MitigateError> {
    let cfg = strategy_config(config, Strategy::Explore);
    cfg.validate()?;
    let templates = cfg.templates()?;
    let last = transcript
        .rounds
        .iter()
        .rev()
        .find(|r| r.path.is_none() && r.checkpoint.is_none())
        .filter(|r| r.succeeded())
        .ok_or_else(|| MitigateError::Precondition("transcript has no completed answer round".into()))?;
    let current = transcript
        .stages()
        .into_iter()
        .rev()
        .find(|s| s.path.is_none() && s.checkpoint.is_none())
        .ok_or_else(|| MitigateError::Precondition("transcript has no completed answer round".into()))?
        .solutions;
    let mut history = last.request.clone();
    history.push(Message::assistant(last.response.clone().unwrap_or_default()));
    let mut base = transcript.clone();
    base.strategy = Strategy::Explore;
    let mut session = Session::new(client, &cfg, &templates, item).with_transcript(base);
    explore_rounds(&mut session, &mut history, &current).expect("no cancellation without a control");
    Ok(session.finish())
}

/// `n` independent answer and confidence conversations, aggregated.
pub fn self_consistency(
    client: &dyn ChatClient,
    item: &BenchmarkItem,
    n: u32,
    strategy: Aggregation,
    config: &RunConfig,
) -> Result<(AggregatedResult, Transcript), MitigateError> {
    let kind = match strategy {
        Aggregation::MedianConf => Strategy::ScMedian,
        Aggregation::Voting => Strategy::ScVote,
    };
    let mut cfg = strategy_config(config, kind);
    cfg.strategy.n = n;
    cfg.validate()?;
    let templates = cfg.templates()?;
    let mut session = Session::new(client, &cfg, &templates, item);
    execute(&mut session).expect("no cancellation without a control");
    let transcript = session.finish();
    let result = aggregate(&transcript.paths(), strategy)?;
    Ok((result, transcript))
}

/// One forced answer per checkpoint. Each returned transcript holds only
/// that checkpoint's rounds.
pub fn reflection_budget(
    client: &dyn ChatClient,
    item: &BenchmarkItem,
    checkpoints: &[u32],
    config: &RunConfig,
) -> Result<Vec<(u32, Transcript)>, MitigateError> {
    let mut cfg = strategy_config(config, Strategy::Reflect);
    cfg.strategy.checkpoints = checkpoints.to_vec();
    cfg.validate_for(client.supports_continuation())?;
    let templates = cfg.templates()?;
    let mut session = Session::new(client, &cfg, &templates, item);
    execute(&mut session).expect("no cancellation without a control");
    let full = session.finish();
    Ok(checkpoints
        .iter()
        .map(|&c| {
            let mut part = full.clone();
            part.rounds.retain(|r| r.checkpoint == Some(c));
            part.status = if part.rounds.iter().any(|r| !r.succeeded()) {
                TranscriptStatus::EndpointFailed
            } else if part.primary().is_none_or(|s| s.solutions.is_empty()) {
                TranscriptStatus::ParseEmpty
            } else {
                TranscriptStatus::Complete
            };
            (c, part)
        })
        .collect())
}

#[cfg(test)]
mod tests;
