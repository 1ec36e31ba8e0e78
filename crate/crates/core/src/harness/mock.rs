//! Scripted and rule-based endpoints that speak the same wire format as a
//! real server, for hermetic runs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::client::{ChatClient, Completion, EndpointError};
use super::wire::{decode_request, decode_response, encode_request, encode_response, ChatRequest, ChatResponse, Usage};
use super::HarnessError;
use crate::corpus::{parse_question, Instance, ScheduleSolution, SubsetSolution};
use crate::oracle::{self, Solution, SolutionSet};
use crate::protocol::{render_solutions, PromptTemplates, Role};
use crate::rng::InstanceRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    Timeout,
    Http(u16),
    /// A 200 response whose body is not valid JSON.
    Malformed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Text {
        content: String,
        reasoning: Option<String>,
        finish_reason: String,
    },
    Fault(Fault),
}

impl MockReply {
    pub fn text(content: impl Into<String>) -> Self {
        MockReply::Text {
            content: content.into(),
            reasoning: None,
            finish_reason: "stop".into(),
        }
    }
}

type Handler = dyn Fn(&ChatRequest, usize) -> MockReply + Send + Sync;

pub struct MockEndpoint {
    handler: Box<Handler>,
    calls: AtomicUsize,
    continuation: bool,
    latency_ms: u64,
}

fn words(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl MockEndpoint {
    /// `f` receives the decoded request and the zero-based call number.
    pub fn from_fn(f: impl Fn(&ChatRequest, usize) -> MockReply + Send + Sync + 'static) -> Self {
        Self {
            handler: Box::new(f),
            calls: AtomicUsize::new(0),
            continuation: true,
            latency_ms: 0,
        }
    }

    /// Replies in order; an exhausted script answers HTTP 500.
    pub fn scripted(replies: Vec<MockReply>) -> Self {
        let queue = Mutex::new(std::collections::VecDeque::from(replies));
        Self::from_fn(move |_, _| {
            queue
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or(MockReply::Fault(Fault::Http(500)))
        })
    }

    pub fn persona(persona: Persona) -> Self {
        let engine = PersonaEngine::new(persona);
        Self::from_fn(move |req, _| engine.respond(req))
    }

    pub fn with_continuation(mut self, enabled: bool) -> Self {
        self.continuation = enabled;
        self
    }

    /// Latency reported for every reply.
    pub fn with_latency_ms(mut self, ms: u64) -> Self {
        self.latency_ms = ms;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatClient for MockEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, EndpointError> {
        let received = decode_request(&encode_request(request)).map_err(|e| EndpointError::Http {
            status: 400,
            body: e.to_string(),
        })?;
        if received.is_continuation() && !self.continuation {
            return Err(EndpointError::Http {
                status: 400,
                body: "continuation not supported".into(),
            });
        }
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let body = match (self.handler)(&received, call) {
            MockReply::Fault(Fault::Timeout) => return Err(EndpointError::Timeout),
            MockReply::Fault(Fault::Http(status)) => {
                return Err(EndpointError::Http {
                    status,
                    body: "mock fault".into(),
                })
            }
            MockReply::Fault(Fault::Malformed) => "{\"choices\": [".to_owned(),
            MockReply::Text {
                content,
                reasoning,
                finish_reason,
            } => {
                let prompt_tokens: u64 = received.messages.iter().map(|m| words(&m.content)).sum();
                let completion_tokens = words(&content) + reasoning.as_deref().map_or(0, words);
                let mut resp = ChatResponse::text(
                    content,
                    &finish_reason,
                    Some(Usage {
                        prompt_tokens,
                        completion_tokens,
                        total_tokens: prompt_tokens + completion_tokens,
                    }),
                );
                resp.choices[0].message.reasoning_content = reasoning;
                encode_response(&resp)
            }
        };
        let response = decode_response(&body).map_err(EndpointError::Malformed)?;
        Ok(Completion {
            response,
            latency_ms: self.latency_ms,
        })
    }

    fn supports_continuation(&self) -> bool {
        self.continuation
    }
}

/// Rule-based model behaviour. The persona reads the question out of the
/// answer prompt, solves it, and answers with a controlled share of the
/// true solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Persona {
    pub name: String,
    /// Share of the ground truth listed in the first answer.
    pub recall: f64,
    /// Reported confidence on the 0–100 scale.
    pub confidence: u8,
    /// Largest per-conversation deviation from `confidence`.
    pub confidence_jitter: u8,
    /// Choose listed solutions per conversation seed instead of in order.
    pub shuffle: bool,
    /// Invalid solutions added to every answer.
    pub wrong: usize,
    /// Solutions added when asked to recheck; zero keeps the answer.
    pub recheck_gain: usize,
    /// Solutions added after the exploration cue; zero keeps the answer.
    pub explore_gain: usize,
    /// Consecutive confidence requests answered without a score.
    pub confidence_misses: u32,
    /// Words per reasoning segment. Each segment finds one solution and
    /// answers only list what the trace has found. Zero disables traces.
    pub trace_segment_words: usize,
}

impl Default for Persona {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            recall: 1.0,
            confidence: 90,
            confidence_jitter: 0,
            shuffle: false,
            wrong: 0,
            recheck_gain: 0,
            explore_gain: 0,
            confidence_misses: 0,
            trace_segment_words: 0,
        }
    }
}

pub const BUILTIN_PERSONAS: [&str; 5] = ["perfect", "calibrated", "overconfident", "explorer", "reflective"];

impl Persona {
    pub fn builtin(name: &str) -> Option<Self> {
        let base = Persona {
            name: name.into(),
            ..Default::default()
        };
        Some(match name {
            "perfect" => Persona {
                recall: 1.0,
                confidence: 100,
                ..base
            },
            "calibrated" => Persona {
                recall: 0.9,
                confidence: 90,
                ..base
            },
            "overconfident" => Persona {
                recall: 0.1,
                confidence: 95,
                ..base
            },
            "explorer" => Persona {
                recall: 0.5,
                confidence: 80,
                recheck_gain: 1,
                explore_gain: 1,
                shuffle: true,
                confidence_jitter: 10,
                ..base
            },
            "reflective" => Persona {
                recall: 1.0,
                confidence: 85,
                trace_segment_words: 64,
                ..base
            },
            _ => return None,
        })
    }

    /// A builtin name or a path to a JSON persona file.
    pub fn resolve(spec: &str) -> Result<Self, HarnessError> {
        if let Some(p) = Self::builtin(spec) {
            return Ok(p);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| {
            HarnessError::Config(format!(
                "mock persona `{spec}` is neither a builtin ({}) nor a readable file: {e}",
                BUILTIN_PERSONAS.join(", ")
            ))
        })?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{spec}: {e}")))
    }
}

const QUESTION_START: &str = "The question is ";
const QUESTION_END: &str = "\nYou must output all feasible solutions";
const SEGMENT_END: &str = "found.";

struct Known {
    instance: Instance,
    truth: SolutionSet,
}

struct PersonaEngine {
    persona: Persona,
    templates: PromptTemplates,
    cache: Mutex<HashMap<String, Arc<Known>>>,
}

enum Turn {
    Answer,
    Confidence,
    Recheck,
    Explore,
}

impl PersonaEngine {
    fn new(persona: Persona) -> Self {
        Self {
            persona,
            templates: PromptTemplates::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn known(&self, question: &str) -> Option<Arc<Known>> {
        if let Some(k) = self.cache.lock().unwrap().get(question) {
            return Some(k.clone());
        }
        let instance = parse_question(question).ok()?;
        let truth = oracle::solve(&instance, &oracle::SolverConfig::default()).ok()?;
        let known = Arc::new(Known { instance, truth });
        self.cache.lock().unwrap().insert(question.to_owned(), known.clone());
        Some(known)
    }

    fn turn(&self, text: &str) -> Turn {
        if text == self.templates.confidence {
            Turn::Confidence
        } else if text == self.templates.recheck {
            Turn::Recheck
        } else if text == self.templates.explore {
            Turn::Explore
        } else {
            Turn::Answer
        }
    }

    fn respond(&self, req: &ChatRequest) -> MockReply {
        let first = req
            .messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str());
        let question = first.and_then(|t| {
            let start = t.find(QUESTION_START)? + QUESTION_START.len();
            let end = t[start..].find(QUESTION_END).map_or(t.len(), |e| start + e);
            Some(&t[start..end])
        });
        let Some(known) = question.and_then(|q| self.known(q)) else {
            return MockReply::text("I do not understand the question.");
        };
        let seed = req.seed.unwrap_or(0);
        let users: Vec<Turn> = req
            .messages
            .iter()
            .filter(|m| m.role == Role::User)
            .map(|m| self.turn(&m.content))
            .collect();
        let rechecks = users.iter().filter(|t| matches!(t, Turn::Recheck)).count();
        let explores = users.iter().filter(|t| matches!(t, Turn::Explore)).count();
        let p = &self.persona;
        let n = known.truth.len();
        let base = ((p.recall * n as f64).round().max(0.0) as usize).min(n);
        let listed = (base + rechecks * p.recheck_gain + explores * p.explore_gain).min(n);

        if req.is_continuation() {
            let prefix = req.messages.last().map_or("", |m| m.content.as_str());
            let found = prefix.matches(SEGMENT_END).count().min(base);
            return MockReply::text(self.answer_text(&known, found, seed));
        }
        match users.last().unwrap_or(&Turn::Answer) {
            Turn::Confidence => {
                let streak = users.iter().rev().take_while(|t| matches!(t, Turn::Confidence)).count() as u32;
                if streak <= p.confidence_misses {
                    return MockReply::text("I am fairly certain about my answer.");
                }
                MockReply::text(format!("[[CONFIDENCE: \\boxed{{{}}}]]", self.confidence(seed)))
            }
            Turn::Recheck if p.recheck_gain == 0 => MockReply::text("[[UNCHANGE]]"),
            Turn::Explore if p.explore_gain == 0 => MockReply::text("[[UNCHANGE]]"),
            Turn::Recheck | Turn::Explore => {
                MockReply::text(format!("[[CHANGE]]\n{}", self.answer_text(&known, listed, seed)))
            }
            Turn::Answer if p.trace_segment_words > 0 => {
                self.traced_answer(&known, base, seed, req.max_completion_tokens)
            }
            Turn::Answer => MockReply::text(self.answer_text(&known, listed, seed)),
        }
    }

    fn confidence(&self, seed: u64) -> u8 {
        let p = &self.persona;
        let c = i64::from(p.confidence.min(100));
        if p.confidence_jitter == 0 {
            return c as u8;
        }
        let j = i64::from(p.confidence_jitter);
        let mut rng = InstanceRng::new(seed ^ 0xC0F1);
        (c + rng.range_inclusive(-j, j)).clamp(0, 100) as u8
    }

    /// Indices of the listed solutions. Under shuffling, a larger count
    /// from the same seed extends a smaller one.
    fn pick(&self, known: &Known, count: usize, seed: u64) -> Vec<usize> {
        let n = known.truth.len();
        if self.persona.shuffle {
            InstanceRng::new(seed).sample_indices(n, count)
        } else {
            (0..count).collect()
        }
    }

    fn answer_text(&self, known: &Known, count: usize, seed: u64) -> String {
        let truth = known.truth.as_slice();
        let mut chosen: Vec<Solution> = self
            .pick(known, count, seed)
            .into_iter()
            .map(|i| truth[i].clone())
            .collect();
        chosen.extend(wrong_solutions(&known.instance, &known.truth, self.persona.wrong));
        format!("Here is my answer.\n{}", render_solutions(chosen.iter()))
    }

    /// A reasoning trace of one segment per solution followed by the
    /// answer, cut at the completion budget.
    fn traced_answer(&self, known: &Known, count: usize, seed: u64, budget: u32) -> MockReply {
        let w = self.persona.trace_segment_words.max(3);
        let mut trace = String::from("<think>\n");
        for i in 1..=count {
            let filler = vec!["hmm"; w - 3].join(" ");
            trace.push_str(&format!("{filler} Candidate {i} {SEGMENT_END}\n"));
        }
        trace.push_str("</think>\n\n");
        let full = trace + &self.answer_text(known, count, seed);
        let tokens: Vec<&str> = full.split_whitespace().collect();
        if tokens.len() as u64 > u64::from(budget) {
            MockReply::Text {
                content: tokens[..budget as usize].join(" "),
                reasoning: None,
                finish_reason: "length".into(),
            }
        } else {
            MockReply::text(full)
        }
    }
}

/// Well-formed answers that break the instance constraints.
fn wrong_solutions(instance: &Instance, truth: &SolutionSet, count: usize) -> Vec<Solution> {
    let mut out = Vec::new();
    match instance {
        Instance::SubsetSum(s) => {
            for &e in &s.elements {
                if out.len() == count {
                    break;
                }
                let candidate: Solution = SubsetSolution::new(vec![e]).into();
                if e != s.target && !truth.contains(&candidate) {
                    out.push(candidate);
                }
            }
        }
        Instance::TimeTabling(t) => {
            if let Some(Solution::Schedule(first)) = truth.as_slice().first() {
                for i in 0..count as u32 {
                    let mut bad: ScheduleSolution = first.clone();
                    for a in bad.assignments.values_mut() {
                        a.teacher = t.num_teachers + i;
                    }
                    out.push(bad.into());
                }
            }
        }
    }
    out
}
