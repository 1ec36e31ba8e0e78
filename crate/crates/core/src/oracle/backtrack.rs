//! Deterministic backtracking enumeration.
//!
//! TimeTabling: variables are courses in id order, values are tried times
//! ascending then rooms ascending, so solutions come out in canonical order.
//! SubsetSum: elements are sorted ascending and extended combination-style,
//! which emits subsets in lexicographic order.

use super::{OracleError, Solution, SolutionSet, SolverConfig};
use crate::corpus::{Assignment, ScheduleSolution, SubsetSolution, SubsetSumInstance, TaskKind, TimeTablingInstance};

struct Budget {
    nodes: u64,
    limit: u64,
    max_solutions: Option<usize>,
}

impl Budget {
    fn new(cfg: &SolverConfig) -> Self {
        Self {
            nodes: 0,
            limit: cfg.node_budget,
            max_solutions: cfg.max_solutions,
        }
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.limit {
            Err(OracleError::BudgetExceeded { nodes: self.limit })
        } else {
            Ok(())
        }
    }

    fn admit(&self, found: usize) -> Result<(), OracleError> {
        match self.max_solutions {
            Some(cap) if found > cap => Err(OracleError::TooManySolutions { limit: cap }),
            _ => Ok(()),
        }
    }
}

pub fn solve_timetabling_with(instance: &TimeTablingInstance, cfg: &SolverConfig) -> Result<SolutionSet, OracleError> {
    instance.validate()?;
    let times = instance.num_times as usize;
    let mut search = TtSearch {
        instance,
        room_busy: vec![false; times * instance.num_rooms as usize],
        teacher_busy: vec![false; times * instance.num_teachers as usize],
        current: Vec::with_capacity(instance.courses.len()),
        out: Vec::new(),
        budget: Budget::new(cfg),
    };
    search.descend(0)?;
    Ok(SolutionSet::from_sorted_unchecked(TaskKind::TimeTabling, search.out))
}

struct TtSearch<'a> {
    instance: &'a TimeTablingInstance,
    room_busy: Vec<bool>,
    teacher_busy: Vec<bool>,
    current: Vec<Assignment>,
    out: Vec<Solution>,
    budget: Budget,
}

impl TtSearch<'_> {
    fn descend(&mut self, course_idx: usize) -> Result<(), OracleError> {
        if course_idx == self.instance.courses.len() {
            let sched = ScheduleSolution {
                assignments: self.current.iter().enumerate().map(|(c, a)| (c as u32, *a)).collect(),
            };
            self.out.push(Solution::Schedule(sched));
            return self.budget.admit(self.out.len());
        }
        let course = &self.instance.courses[course_idx];
        let rooms = self.instance.num_rooms as usize;
        let teachers = self.instance.num_teachers as usize;
        let teacher = course.teacher as usize;
        for &t in &course.allowed_times {
            let t = t as usize;
            if self.teacher_busy[t * teachers + teacher] {
                continue;
            }
            for &r in &course.allowed_rooms {
                self.budget.tick()?;
                let slot = t * rooms + r as usize;
                if self.room_busy[slot] {
                    continue;
                }
                self.room_busy[slot] = true;
                self.teacher_busy[t * teachers + teacher] = true;
                self.current.push(Assignment {
                    time: t as u32,
                    room: r,
                    teacher: course.teacher,
                });
                let res = self.descend(course_idx + 1);
                self.current.pop();
                self.room_busy[slot] = false;
                self.teacher_busy[t * teachers + teacher] = false;
                res?;
            }
        }
        Ok(())
    }
}

pub fn solve_subsetsum_with(instance: &SubsetSumInstance, cfg: &SolverConfig) -> Result<SolutionSet, OracleError> {
    instance.validate()?;
    let mut sorted = instance.elements.clone();
    sorted.sort_unstable();
    // suffix_pos[i] / suffix_neg[i]: sum of positive / negative values in sorted[i..]
    let n = sorted.len();
    let mut suffix_pos = vec![0i64; n + 1];
    let mut suffix_neg = vec![0i64; n + 1];
    for i in (0..n).rev() {
        suffix_pos[i] = suffix_pos[i + 1] + sorted[i].max(0);
        suffix_neg[i] = suffix_neg[i + 1] + sorted[i].min(0);
    }
    let mut search = SsSearch {
        values: &sorted,
        suffix_pos,
        suffix_neg,
        target: instance.target,
        current: Vec::new(),
        out: Vec::new(),
        budget: Budget::new(cfg),
    };
    search.extend(0, 0)?;
    Ok(SolutionSet::from_sorted_unchecked(TaskKind::SubsetSum, search.out))
}

struct SsSearch<'a> {
    values: &'a [i64],
    suffix_pos: Vec<i64>,
    suffix_neg: Vec<i64>,
    target: i64,
    current: Vec<i64>,
    out: Vec<Solution>,
    budget: Budget,
}

impl SsSearch<'_> {
    /// Tries every next element at index >= `start` on top of `current`.
    fn extend(&mut self, start: usize, sum: i64) -> Result<(), OracleError> {
        for j in start..self.values.len() {
            let next = sum + self.values[j];
            // everything still addable after j lies in [neg, pos] around next
            let reach_lo = next + self.suffix_neg[j + 1];
            let reach_hi = next + self.suffix_pos[j + 1];
            let hits = next == self.target;
            if !hits && (self.target < reach_lo || self.target > reach_hi) {
                // with sorted values, larger j only raises `next` once the
                // remaining values are non-negative
                if self.values[j] >= 0 && next > self.target {
                    break;
                }
                continue;
            }
            self.budget.tick()?;
            self.current.push(self.values[j]);
            if hits {
                self.out.push(Solution::Subset(SubsetSolution {
                    members: self.current.clone(),
                }));
                self.budget.admit(self.out.len())?;
            }
            let res = if self.target >= reach_lo && self.target <= reach_hi {
                self.extend(j + 1, next)
            } else {
                Ok(())
            };
            self.current.pop();
            res?;
        }
        Ok(())
    }
}
