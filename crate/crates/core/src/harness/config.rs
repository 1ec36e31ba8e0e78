use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::client::EndpointConfig;
use super::HarnessError;
use crate::mitigate::Aggregation;
use crate::protocol::{Paradigm, PromptTemplates};

/// Optional rounds after the answer and confidence rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundPlan {
    pub recheck: bool,
    pub explore: bool,
}

/// Retries per request. Backoff doubles after each failure, capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            backoff_ms: 1000,
            max_backoff_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, failures: u32) -> std::time::Duration {
        let ms = self
            .backoff_ms
            .saturating_mul(1u64 << failures.min(20).saturating_sub(1));
        std::time::Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    None,
    Explore,
    ScMedian,
    ScVote,
    Reflect,
}

impl Strategy {
    pub fn aggregation(self) -> Option<Aggregation> {
        match self {
            Strategy::ScMedian => Some(Aggregation::MedianConf),
            Strategy::ScVote => Some(Aggregation::Voting),
            _ => None,
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Strategy::None),
            "explore" => Ok(Strategy::Explore),
            "sc-median" => Ok(Strategy::ScMedian),
            "sc-vote" => Ok(Strategy::ScVote),
            "reflect" => Ok(Strategy::Reflect),
            other => Err(HarnessError::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::Explore => "explore",
            Strategy::ScMedian => "sc-median",
            Strategy::ScVote => "sc-vote",
            Strategy::Reflect => "reflect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: Strategy,
    /// Self-consistency path count.
    pub n: u32,
    /// Reflection checkpoints; each allows `checkpoint * checkpoint_tokens`
    /// reasoning tokens before the answer is forced.
    pub checkpoints: Vec<u32>,
    pub checkpoint_tokens: u32,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: Strategy::None,
            n: 32,
            checkpoints: vec![1, 2, 4, 8],
            checkpoint_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub endpoint: EndpointConfig,
    pub model: String,
    pub paradigm: Paradigm,
    pub temperature: f64,
    pub max_completion_tokens: u32,
    pub plan: RoundPlan,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    pub seed: u64,
    pub strategy: StrategyConfig,
    /// Directory of prompt overrides.
    pub templates_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            endpoint: EndpointConfig::default(),
            model: "model".into(),
            paradigm: Paradigm::LongCot,
            temperature: 0.2,
            max_completion_tokens: 20480,
            plan: RoundPlan::default(),
            parallelism: 4,
            retry: RetryPolicy::default(),
            seed: 0,
            strategy: StrategyConfig::default(),
            templates_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(HarnessError::Config(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        if self.parallelism == 0 {
            return Err(HarnessError::Config("parallelism must be >= 1".into()));
        }
        if self.max_completion_tokens == 0 {
            return Err(HarnessError::Config("max_completion_tokens must be >= 1".into()));
        }
        match self.strategy.kind {
            Strategy::ScMedian | Strategy::ScVote if self.strategy.n == 0 => {
                return Err(HarnessError::Config("self-consistency needs n >= 1".into()))
            }
            Strategy::Reflect if self.strategy.checkpoints.is_empty() => {
                return Err(HarnessError::Config("reflection needs at least one checkpoint".into()))
            }
            Strategy::Reflect => {
                let mut seen = self.strategy.checkpoints.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != self.strategy.checkpoints.len() {
                    return Err(HarnessError::Config("reflection checkpoints must be distinct".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Validation that depends on the client.
    pub fn validate_for(&self, supports_continuation: bool) -> Result<(), HarnessError> {
        self.validate()?;
        if self.strategy.kind == Strategy::Reflect && !supports_continuation {
            return Err(HarnessError::UnsupportedEndpoint(
                "reflection checkpoints need assistant-prefix continuation".into(),
            ));
        }
        Ok(())
    }

    pub fn templates(&self) -> Result<PromptTemplates, HarnessError> {
        match &self.templates_dir {
            Some(dir) => PromptTemplates::with_overrides(dir).map_err(|e| HarnessError::Config(e.to_string())),
            None => Ok(PromptTemplates::default()),
        }
    }

    /// The settings that must agree between a run and its resumption.
    pub(crate) fn resume_key(&self) -> RunConfig {
        RunConfig {
            parallelism: 1,
            retry: RetryPolicy::default(),
            endpoint: EndpointConfig {
                timeout_secs: 0,
                ..self.endpoint.clone()
            },
            ..self.clone()
        }
    }
}
