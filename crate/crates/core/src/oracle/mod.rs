//! Exhaustive ground-truth enumeration.
//!
//! [`solve`] is the production path (backtracking with a node budget);
//! [`brute_force`] is a deliberately naive reference used to cross-check it.

mod backtrack;
mod brute;
pub mod check;
mod solution;

pub use brute::{
    brute_force, brute_force_subsetsum, brute_force_timetabling, MAX_SCHEDULE_CANDIDATES, MAX_SUBSET_ELEMENTS,
};
pub use solution::{KindMismatch, Solution, SolutionSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, Instance, SubsetSumInstance, TimeTablingInstance};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    /// The search tried more nodes than allowed. The instance is rejected
    /// rather than returning a truncated ground truth.
    #[error("search exceeded node budget of {nodes}")]
    BudgetExceeded { nodes: u64 },
    #[error("more than {limit} solutions")]
    TooManySolutions { limit: usize },
    #[error("instance too large for exhaustive scan: {0}")]
    AboveScanBound(String),
    #[error(transparent)]
    Invalid(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub node_budget: u64,
    /// Abort as soon as more solutions than this are found.
    pub max_solutions: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            node_budget: 10_000_000,
            max_solutions: None,
        }
    }
}

pub fn solve(instance: &Instance, cfg: &SolverConfig) -> Result<SolutionSet, OracleError> {
    match instance {
        Instance::TimeTabling(i) => backtrack::solve_timetabling_with(i, cfg),
        Instance::SubsetSum(i) => backtrack::solve_subsetsum_with(i, cfg),
    }
}

pub fn solve_timetabling(instance: &TimeTablingInstance) -> Result<SolutionSet, OracleError> {
    backtrack::solve_timetabling_with(instance, &SolverConfig::default())
}

pub fn solve_subsetsum(instance: &SubsetSumInstance) -> Result<SolutionSet, OracleError> {
    backtrack::solve_subsetsum_with(instance, &SolverConfig::default())
}

/// Every member of `set` satisfies the instance constraints.
pub fn all_valid(instance: &Instance, set: &SolutionSet) -> bool {
    set.iter().all(|s| match (instance, s) {
        (Instance::TimeTabling(i), Solution::Schedule(x)) => check::schedule_is_valid(i, x),
        (Instance::SubsetSum(i), Solution::Subset(x)) => check::subset_is_valid(i, x),
        _ => false,
    })
}
