//! Per-item conversation records and the answer stages derived from them.

use serde::{Deserialize, Serialize};

use super::config::Strategy;
use super::wire::Usage;
use crate::corpus::TaskKind;
use crate::metrics::normalize_confidence;
use crate::mitigate::{aggregate, PathResult};
use crate::oracle::SolutionSet;
use crate::protocol::{Message, Paradigm, ParseOutcome, RoundKind};

type PendingTrace = (Option<u32>, Option<u32>, (u64, LengthUnit));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranscriptStatus {
    Complete,
    ParseEmpty,
    EndpointFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// Position within the item's conversation, from 0.
    pub seq: u32,
    pub kind: RoundKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_tokens: Option<u32>,
    pub request: Vec<Message>,
    #[serde(default)]
    pub continuation: bool,
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default)]
    pub finish_reason: Option<String>,
    pub parse: Option<ParseOutcome>,
    pub latency_ms: u64,
    pub usage: Option<Usage>,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Round {
    pub fn succeeded(&self) -> bool {
        self.response.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub item_id: String,
    pub task_kind: TaskKind,
    pub paradigm: Paradigm,
    pub strategy: Strategy,
    pub rounds: Vec<Round>,
    pub status: TranscriptStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Tokens,
    Words,
}

/// One scoreable answer inside a transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct StageAnswer {
    pub label: String,
    pub kind: RoundKind,
    pub path: Option<u32>,
    pub checkpoint: Option<u32>,
    pub solutions: SolutionSet,
    /// Fraction in [0, 1].
    pub confidence: Option<f64>,
    pub verbal_confidence: Option<u8>,
    pub reasoning_length: Option<(u64, LengthUnit)>,
}

fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

fn round_length(round: &Round) -> (u64, LengthUnit) {
    match round.usage {
        Some(u) => (u.completion_tokens, LengthUnit::Tokens),
        None => {
            let mut n = round.response.as_deref().map(word_count).unwrap_or(0);
            n += round.reasoning.as_deref().map(word_count).unwrap_or(0);
            (n, LengthUnit::Words)
        }
    }
}

fn label_for(kind: RoundKind, path: Option<u32>, checkpoint: Option<u32>) -> String {
    match (path, checkpoint, kind) {
        (Some(p), _, _) => format!("path-{p}"),
        (None, Some(c), _) => format!("checkpoint-{c}"),
        (None, None, RoundKind::Recheck) => "recheck".into(),
        (None, None, RoundKind::Explore) => "explore".into(),
        (None, None, RoundKind::Reflect) => "reflect".into(),
        _ => "answer".into(),
    }
}

impl Transcript {
    pub fn new(item_id: impl Into<String>, task_kind: TaskKind, paradigm: Paradigm, strategy: Strategy) -> Self {
        Self {
            item_id: item_id.into(),
            task_kind,
            paradigm,
            strategy,
            rounds: Vec::new(),
            status: TranscriptStatus::Complete,
        }
    }

    /// Every answer in conversation order, each with the confidence elicited
    /// right after it.
    pub fn stages(&self) -> Vec<StageAnswer> {
        let mut stages: Vec<StageAnswer> = Vec::new();
        // (path, checkpoint, trace length) of reflect rounds awaiting their answer
        let mut pending_trace: Vec<PendingTrace> = Vec::new();
        for round in self.rounds.iter().filter(|r| r.succeeded()) {
            let Some(parse) = &round.parse else { continue };
            match round.kind {
                RoundKind::Reflect if round.finish_reason.as_deref() == Some("length") => {
                    pending_trace.push((round.path, round.checkpoint, round_length(round)))
                }
                // a reflection that finished inside its budget is itself the answer
                RoundKind::Answer | RoundKind::Recheck | RoundKind::Explore | RoundKind::Reflect => {
                    let mut length = round_length(round);
                    if round.kind == RoundKind::Answer {
                        pending_trace.retain(|(p, c, extra)| {
                            if (*p, *c) == (round.path, round.checkpoint) {
                                length.0 += extra.0;
                                if extra.1 == LengthUnit::Words {
                                    length.1 = LengthUnit::Words;
                                }
                                false
                            } else {
                                true
                            }
                        });
                    }
                    stages.push(StageAnswer {
                        label: label_for(round.kind, round.path, round.checkpoint),
                        kind: if round.kind == RoundKind::Reflect {
                            RoundKind::Answer
                        } else {
                            round.kind
                        },
                        path: round.path,
                        checkpoint: round.checkpoint,
                        solutions: parse.solutions.clone(),
                        confidence: None,
                        verbal_confidence: None,
                        reasoning_length: Some(length),
                    });
                }
                RoundKind::Confidence => {
                    if let Some(c) = parse.confidence {
                        if let Some(stage) = stages
                            .iter_mut()
                            .rev()
                            .find(|s| (s.path, s.checkpoint) == (round.path, round.checkpoint))
                        {
                            stage.verbal_confidence = Some(c);
                            stage.confidence = Some(normalize_confidence(c));
                        }
                    }
                }
            }
        }
        stages
    }

    pub fn stage(&self, label: &str) -> Option<StageAnswer> {
        self.stages().into_iter().find(|s| s.label == label)
    }

    /// Settled self-consistency paths; a path with any failed round is
    /// dropped.
    pub fn paths(&self) -> Vec<PathResult> {
        let failed: Vec<u32> = self
            .rounds
            .iter()
            .filter(|r| !r.succeeded())
            .filter_map(|r| r.path)
            .collect();
        self.stages()
            .into_iter()
            .filter(|s| s.path.is_some_and(|p| !failed.contains(&p)))
            .filter_map(|s| {
                s.path.map(|path| PathResult {
                    path,
                    solutions: s.solutions,
                    confidence: s.verbal_confidence,
                })
            })
            .collect()
    }

    /// The answer that represents the item under its strategy.
    pub fn primary(&self) -> Option<StageAnswer> {
        match self.strategy {
            Strategy::None => self.stage("answer"),
            Strategy::Explore => self.stage("explore"),
            Strategy::Reflect => self.stages().into_iter().rev().find(|s| s.checkpoint.is_some()),
            Strategy::ScMedian | Strategy::ScVote => {
                let paths = self.paths();
                let result = aggregate(&paths, self.strategy.aggregation()?).ok()?;
                let length = self
                    .stages()
                    .iter()
                    .filter(|s| s.path.is_some())
                    .filter_map(|s| s.reasoning_length)
                    .reduce(|a, b| (a.0 + b.0, if b.1 == LengthUnit::Words { b.1 } else { a.1 }));
                Some(StageAnswer {
                    label: "aggregate".into(),
                    kind: RoundKind::Answer,
                    path: result.selected_path,
                    checkpoint: None,
                    solutions: result.final_set,
                    confidence: result.final_confidence,
                    verbal_confidence: None,
                    reasoning_length: length,
                })
            }
        }
    }

    /// Answer-round and recheck-round sets, when a recheck was run.
    pub fn recheck_pair(&self) -> Option<(SolutionSet, SolutionSet)> {
        Some((self.stage("answer")?.solutions, self.stage("recheck")?.solutions))
    }
}
