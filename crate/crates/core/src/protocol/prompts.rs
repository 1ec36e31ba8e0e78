use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::corpus::{BenchmarkItem, TaskKind};

pub const QUESTION_SLOT: &str = "<<QUESTION>>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Paradigm {
    ShortCot,
    LongCot,
}

impl std::str::FromStr for Paradigm {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "short-cot" | "short" => Ok(Paradigm::ShortCot),
            "long-cot" | "long" => Ok(Paradigm::LongCot),
            other => Err(ProtocolError::Template(format!("unknown paradigm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundKind {
    Answer,
    Confidence,
    Recheck,
    Explore,
    /// Budget-limited reasoning segment before a forced answer.
    Reflect,
}

/// The user-turn texts for one item under one paradigm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub paradigm: Paradigm,
    pub messages: Vec<(RoundKind, Message)>,
}

impl PromptBundle {
    pub fn get(&self, kind: RoundKind) -> Option<&Message> {
        self.messages.iter().find(|(k, _)| *k == kind).map(|(_, m)| m)
    }
}

fn embedded(text: &'static str) -> String {
    text.strip_suffix('\n').unwrap_or(text).to_owned()
}

/// Prompt texts. Defaults are embedded in the binary; any of them can be
/// replaced by a file of the same name in an override directory:
/// `answer_timetabling.txt`, `answer_subsetsum.txt`, `confidence.txt`,
/// `recheck.txt`, `explore.txt`, `short_cot_suffix.txt`. A single trailing
/// newline is dropped from every file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub answer_timetabling: String,
    pub answer_subsetsum: String,
    pub confidence: String,
    pub recheck: String,
    pub explore: String,
    pub short_cot_suffix: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            answer_timetabling: embedded(include_str!("../../templates/answer_timetabling.txt")),
            answer_subsetsum: embedded(include_str!("../../templates/answer_subsetsum.txt")),
            confidence: embedded(include_str!("../../templates/confidence.txt")),
            recheck: embedded(include_str!("../../templates/recheck.txt")),
            explore: embedded(include_str!("../../templates/explore.txt")),
            short_cot_suffix: embedded(include_str!("../../templates/short_cot_suffix.txt")),
        }
    }
}

impl PromptTemplates {
    pub fn with_overrides(dir: &Path) -> Result<Self, ProtocolError> {
        let mut t = Self::default();
        let slots: [(&str, &mut String); 6] = [
            ("answer_timetabling.txt", &mut t.answer_timetabling),
            ("answer_subsetsum.txt", &mut t.answer_subsetsum),
            ("confidence.txt", &mut t.confidence),
            ("recheck.txt", &mut t.recheck),
            ("explore.txt", &mut t.explore),
            ("short_cot_suffix.txt", &mut t.short_cot_suffix),
        ];
        for (name, slot) in slots {
            let path = dir.join(name);
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ProtocolError::Template(format!("{}: {e}", path.display())))?;
                *slot = text.strip_suffix('\n').unwrap_or(&text).to_owned();
            }
        }
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        for (name, text) in [
            ("answer_timetabling", &self.answer_timetabling),
            ("answer_subsetsum", &self.answer_subsetsum),
        ] {
            if text.matches(QUESTION_SLOT).count() != 1 {
                return Err(ProtocolError::Template(format!(
                    "{name} must contain {QUESTION_SLOT} exactly once"
                )));
            }
        }
        Ok(())
    }

    pub fn answer_prompt(&self, item: &BenchmarkItem, paradigm: Paradigm) -> String {
        let template = match item.task_kind {
            TaskKind::TimeTabling => &self.answer_timetabling,
            TaskKind::SubsetSum => &self.answer_subsetsum,
        };
        let mut text = template.replace(QUESTION_SLOT, &item.question_text);
        if paradigm == Paradigm::ShortCot {
            text.push('\n');
            text.push_str(&self.short_cot_suffix);
        }
        text
    }

    pub fn bundle(&self, item: &BenchmarkItem, paradigm: Paradigm) -> PromptBundle {
        PromptBundle {
            paradigm,
            messages: vec![
                (RoundKind::Answer, Message::user(self.answer_prompt(item, paradigm))),
                (RoundKind::Confidence, Message::user(self.confidence.clone())),
                (RoundKind::Recheck, Message::user(self.recheck.clone())),
                (RoundKind::Explore, Message::user(self.explore.clone())),
            ],
        }
    }
}

pub fn build_answer_prompt(item: &BenchmarkItem, paradigm: Paradigm) -> String {
    PromptTemplates::default().answer_prompt(item, paradigm)
}

pub fn build_confidence_prompt() -> String {
    PromptTemplates::default().confidence
}

pub fn build_recheck_prompt() -> String {
    PromptTemplates::default().recheck
}

pub fn build_explore_prompt() -> String {
    PromptTemplates::default().explore
}
