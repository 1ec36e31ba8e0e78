use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{ScheduleSolution, SubsetSolution, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Solution {
    Subset(SubsetSolution),
    Schedule(ScheduleSolution),
}

impl Solution {
    pub fn kind(&self) -> TaskKind {
        match self {
            Solution::Schedule(_) => TaskKind::TimeTabling,
            Solution::Subset(_) => TaskKind::SubsetSum,
        }
    }

    pub fn as_schedule(&self) -> Option<&ScheduleSolution> {
        match self {
            Solution::Schedule(s) => Some(s),
            Solution::Subset(_) => None,
        }
    }

    pub fn as_subset(&self) -> Option<&SubsetSolution> {
        match self {
            Solution::Subset(s) => Some(s),
            Solution::Schedule(_) => None,
        }
    }
}

impl From<ScheduleSolution> for Solution {
    fn from(s: ScheduleSolution) -> Self {
        Solution::Schedule(s)
    }
}

impl From<SubsetSolution> for Solution {
    fn from(s: SubsetSolution) -> Self {
        Solution::Subset(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected a {expected} solution, got {found}")]
pub struct KindMismatch {
    pub expected: TaskKind,
    pub found: TaskKind,
}

/// Canonically ordered, duplicate-free set of solutions of one task kind.
///
/// Membership is structural (`Ord` on [`Solution`]); no string comparison is
/// involved anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SolutionSet {
    kind: TaskKind,
    solutions: Vec<Solution>,
}

impl SolutionSet {
    pub fn new(kind: TaskKind) -> Self {
        Self {
            kind,
            solutions: Vec::new(),
        }
    }

    pub fn from_solutions<I, S>(kind: TaskKind, items: I) -> Result<Self, KindMismatch>
    where
        I: IntoIterator<Item = S>,
        S: Into<Solution>,
    {
        let mut solutions = Vec::new();
        for s in items {
            let s = s.into();
            if s.kind() != kind {
                return Err(KindMismatch {
                    expected: kind,
                    found: s.kind(),
                });
            }
            solutions.push(s);
        }
        solutions.sort_unstable();
        solutions.dedup();
        Ok(Self { kind, solutions })
    }

    /// Builds from solutions already in canonical order. Used by the
    /// backtracking solver, whose search order is the canonical order.
    pub(crate) fn from_sorted_unchecked(kind: TaskKind, solutions: Vec<Solution>) -> Self {
        debug_assert!(solutions.windows(2).all(|w| w[0] < w[1]));
        Self { kind, solutions }
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Solution> {
        self.solutions.iter()
    }

    pub fn as_slice(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn contains(&self, s: &Solution) -> bool {
        self.solutions.binary_search(s).is_ok()
    }

    /// Returns `false` if the solution was already present.
    pub fn insert(&mut self, s: Solution) -> Result<bool, KindMismatch> {
        if s.kind() != self.kind {
            return Err(KindMismatch {
                expected: self.kind,
                found: s.kind(),
            });
        }
        match self.solutions.binary_search(&s) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.solutions.insert(pos, s);
                Ok(true)
            }
        }
    }

    fn check_kind(&self, other: &Self) -> Result<(), KindMismatch> {
        if self.kind == other.kind {
            Ok(())
        } else {
            Err(KindMismatch {
                expected: self.kind,
                found: other.kind,
            })
        }
    }

    fn merge(&self, other: &Self, keep_left: bool, keep_both: bool, keep_right: bool) -> Self {
        let (a, b) = (&self.solutions, &other.solutions);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    if keep_left {
                        out.push(a[i].clone());
                    }
                    i += 1;
                }
                Ordering::Greater => {
                    if keep_right {
                        out.push(b[j].clone());
                    }
                    j += 1;
                }
                Ordering::Equal => {
                    if keep_both {
                        out.push(a[i].clone());
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        if keep_left {
            out.extend(a[i..].iter().cloned());
        }
        if keep_right {
            out.extend(b[j..].iter().cloned());
        }
        Self {
            kind: self.kind,
            solutions: out,
        }
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, KindMismatch> {
        self.check_kind(other)?;
        Ok(self.merge(other, false, true, false))
    }

    pub fn difference(&self, other: &Self) -> Result<Self, KindMismatch> {
        self.check_kind(other)?;
        Ok(self.merge(other, true, false, false))
    }

    pub fn union(&self, other: &Self) -> Result<Self, KindMismatch> {
        self.check_kind(other)?;
        Ok(self.merge(other, true, true, true))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.kind == other.kind && self.solutions.iter().all(|s| other.contains(s))
    }
}

impl<'a> IntoIterator for &'a SolutionSet {
    type Item = &'a Solution;
    type IntoIter = std::slice::Iter<'a, Solution>;

    fn into_iter(self) -> Self::IntoIter {
        self.solutions.iter()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionSetRepr {
    task_kind: TaskKind,
    count: usize,
    solutions: Vec<Solution>,
}

impl Serialize for SolutionSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SolutionSetRepr {
            task_kind: self.kind,
            count: self.solutions.len(),
            solutions: self.solutions.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SolutionSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = SolutionSetRepr::deserialize(d)?;
        let n = repr.solutions.len();
        let set = SolutionSet::from_solutions(repr.task_kind, repr.solutions).map_err(D::Error::custom)?;
        if set.len() != n || repr.count != n {
            return Err(D::Error::custom(format!(
                "solution set count {} does not match {} listed / {} distinct solutions",
                repr.count,
                n,
                set.len()
            )));
        }
        Ok(set)
    }
}
