//! Definitionally complete enumeration: power-set scan and full
//! assignment-product filter. Only meant as an independent reference for
//! the backtracking solver, so it refuses anything above its scan bounds.

use super::check::assignments_feasible;
use super::{OracleError, SolutionSet};
use crate::corpus::{
    Assignment, Instance, ScheduleSolution, SubsetSolution, SubsetSumInstance, TaskKind, TimeTablingInstance,
};

pub const MAX_SUBSET_ELEMENTS: usize = 20;
pub const MAX_SCHEDULE_CANDIDATES: u64 = 1_000_000;

pub fn brute_force(instance: &Instance) -> Result<SolutionSet, OracleError> {
    match instance {
        Instance::TimeTabling(i) => brute_force_timetabling(i),
        Instance::SubsetSum(i) => brute_force_subsetsum(i),
    }
}

pub fn brute_force_subsetsum(instance: &SubsetSumInstance) -> Result<SolutionSet, OracleError> {
    instance.validate()?;
    let n = instance.elements.len();
    if n > MAX_SUBSET_ELEMENTS {
        return Err(OracleError::AboveScanBound(format!(
            "{n} elements exceeds the power-set bound of {MAX_SUBSET_ELEMENTS}"
        )));
    }
    let mut found = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let members: Vec<i64> = (0..n)
            .filter(|&b| mask >> b & 1 == 1)
            .map(|b| instance.elements[b])
            .collect();
        if members.iter().sum::<i64>() == instance.target {
            found.push(SubsetSolution::new(members));
        }
    }
    Ok(SolutionSet::from_solutions(TaskKind::SubsetSum, found).expect("single kind"))
}

pub fn brute_force_timetabling(instance: &TimeTablingInstance) -> Result<SolutionSet, OracleError> {
    instance.validate()?;
    let total = instance.candidate_count();
    if total > MAX_SCHEDULE_CANDIDATES {
        return Err(OracleError::AboveScanBound(format!(
            "{total} candidate schedules exceeds the product bound of {MAX_SCHEDULE_CANDIDATES}"
        )));
    }
    let options: Vec<Vec<Assignment>> = instance
        .courses
        .iter()
        .map(|c| {
            c.allowed_times
                .iter()
                .flat_map(|&time| {
                    c.allowed_rooms.iter().map(move |&room| Assignment {
                        time,
                        room,
                        teacher: c.teacher,
                    })
                })
                .collect()
        })
        .collect();
    let mut odometer = vec![0usize; options.len()];
    let mut candidate: Vec<Assignment> = options.iter().map(|o| o[0]).collect();
    let mut found = Vec::new();
    'scan: loop {
        if assignments_feasible(instance, &candidate) {
            found.push(ScheduleSolution {
                assignments: candidate.iter().enumerate().map(|(c, a)| (c as u32, *a)).collect(),
            });
        }
        // advance the odometer, last course fastest
        let mut pos = options.len();
        loop {
            if pos == 0 {
                break 'scan;
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < options[pos].len() {
                candidate[pos] = options[pos][odometer[pos]];
                break;
            }
            odometer[pos] = 0;
            candidate[pos] = options[pos][0];
        }
    }
    Ok(SolutionSet::from_solutions(TaskKind::TimeTabling, found).expect("single kind"))
}
