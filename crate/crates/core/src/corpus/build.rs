//! The generate → solve → stratify loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_question, BenchmarkItem, ComplexityLevel, CorpusError, GenParams, Instance, StrataConfig};
use crate::oracle::{self, OracleError, SolutionSet, SolverConfig};
use crate::rng::derive_seed;

pub fn assign_level(solution_count: usize, strata: &StrataConfig) -> Result<ComplexityLevel, CorpusError> {
    strata
        .bands
        .iter()
        .position(|b| b.contains(solution_count))
        .map(|level_index| ComplexityLevel {
            level_index,
            band: strata.bands[level_index],
        })
        .ok_or(CorpusError::OutOfStrata { count: solution_count })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildOptions {
    /// Total generation attempts before giving up on unfilled levels.
    pub max_attempts: u64,
    /// Attempts generated and solved concurrently per round. Results are
    /// consumed in attempt order, so this never changes the output.
    pub batch_size: usize,
    pub node_budget: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            max_attempts: 2_000_000,
            batch_size: 512,
            node_budget: SolverConfig::default().node_budget,
        }
    }
}

enum Attempt {
    Solved(Instance, SolutionSet),
    Rejected,
}

fn attempt(gen: &GenParams, solver: &SolverConfig, seed: u64) -> Result<Attempt, CorpusError> {
    let instance = gen.generate(seed)?;
    match oracle::solve(&instance, solver) {
        Ok(set) => Ok(Attempt::Solved(instance, set)),
        Err(OracleError::BudgetExceeded { .. } | OracleError::TooManySolutions { .. }) => Ok(Attempt::Rejected),
        Err(e) => Err(CorpusError::Oracle(Box::new(e))),
    }
}

/// Fills every level of `strata` with exactly `quota` items.
///
/// Attempt `i` uses the seed `derive_seed(seed, i)`; items are accepted in
/// attempt order, and the returned list is sorted by level then attempt.
pub fn build_benchmark(
    gen: &GenParams,
    strata: &StrataConfig,
    quota: usize,
    seed: u64,
    options: &BuildOptions,
) -> Result<Vec<BenchmarkItem>, CorpusError> {
    gen.validate()?;
    strata.validate()?;
    if quota == 0 {
        return Err(CorpusError::Config("quota must be at least 1".into()));
    }
    let kind = gen.kind();
    let solver = SolverConfig {
        node_budget: options.node_budget,
        // anything above the top band is discarded anyway
        max_solutions: Some(strata.ceiling()),
    };
    let mut levels: Vec<Vec<BenchmarkItem>> = vec![Vec::new(); strata.len()];
    let mut next: u64 = 0;
    let batch = options.batch_size.max(1) as u64;
    while levels.iter().any(|l| l.len() < quota) && next < options.max_attempts {
        let end = (next + batch).min(options.max_attempts);
        let results: Vec<Result<Attempt, CorpusError>> = (next..end)
            .into_par_iter()
            .map(|i| attempt(gen, &solver, derive_seed(seed, i)))
            .collect();
        for (offset, result) in results.into_iter().enumerate() {
            let index = next + offset as u64;
            let Attempt::Solved(instance, ground_truth) = result? else {
                continue;
            };
            let Ok(level) = assign_level(ground_truth.len(), strata) else {
                continue;
            };
            let slot = &mut levels[level.level_index];
            if slot.len() >= quota {
                continue;
            }
            slot.push(BenchmarkItem {
                item_id: format!("{}-{index:07}", kind.id_prefix()),
                task_kind: kind,
                question_text: render_question(&instance),
                instance,
                ground_truth,
                level,
            });
        }
        next = end;
    }
    let unfilled: Vec<(usize, usize)> = levels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.len() < quota)
        .map(|(i, l)| (i, l.len()))
        .collect();
    if !unfilled.is_empty() {
        return Err(CorpusError::PartialCorpus {
            attempts: next,
            quota,
            unfilled,
        });
    }
    Ok(levels.into_iter().flatten().collect())
}
