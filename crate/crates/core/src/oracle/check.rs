//! Constraint checkers that share no code with the solvers.

use crate::corpus::{Assignment, ScheduleSolution, SubsetSolution, SubsetSumInstance, TimeTablingInstance};

/// Checks a full assignment vector (index = course id) pairwise.
pub fn assignments_feasible(instance: &TimeTablingInstance, assignments: &[Assignment]) -> bool {
    if assignments.len() != instance.courses.len() {
        return false;
    }
    for (course, a) in instance.courses.iter().zip(assignments) {
        if a.teacher != course.teacher
            || !course.allowed_times.contains(&a.time)
            || !course.allowed_rooms.contains(&a.room)
        {
            return false;
        }
    }
    for i in 0..assignments.len() {
        for j in (i + 1)..assignments.len() {
            let (a, b) = (&assignments[i], &assignments[j]);
            if a.time == b.time && (a.room == b.room || a.teacher == b.teacher) {
                return false;
            }
        }
    }
    true
}

pub fn schedule_is_valid(instance: &TimeTablingInstance, schedule: &ScheduleSolution) -> bool {
    let ids_match = schedule.assignments.len() == instance.courses.len()
        && schedule.assignments.keys().enumerate().all(|(i, &c)| i as u32 == c);
    if !ids_match {
        return false;
    }
    let flat: Vec<Assignment> = schedule.assignments.values().copied().collect();
    assignments_feasible(instance, &flat)
}

pub fn subset_is_valid(instance: &SubsetSumInstance, subset: &SubsetSolution) -> bool {
    !subset.members.is_empty()
        && subset.members.windows(2).all(|w| w[0] < w[1])
        && subset.members.iter().all(|m| instance.elements.contains(m))
        && subset.sum() == instance.target
}
