//! Renders solution sets in the answer format the prompts ask for. Used by
//! the scripted endpoints and the parser round-trip tests.

use crate::oracle::{Solution, SolutionSet};

const TABLE_HEAD: &str = "| Course  | Time  | Room  | Teacher  |\n|---------|-------|-------|----------|\n";

fn cell(text: String, width: usize) -> String {
    format!(" {text:<width$}")
}

pub fn render_solution(index: usize, solution: &Solution) -> String {
    match solution {
        Solution::Subset(s) => {
            let members: Vec<String> = s.members.iter().map(i64::to_string).collect();
            format!("Solution {index}: {{{}}}\n", members.join(", "))
        }
        Solution::Schedule(s) => {
            let mut out = format!("Solution {index}:\n{TABLE_HEAD}");
            for (course, a) in &s.assignments {
                out.push('|');
                out.push_str(&cell(format!("Course{course}"), 8));
                out.push('|');
                out.push_str(&cell(format!("T{}", a.time), 6));
                out.push('|');
                out.push_str(&cell(format!("R{}", a.room), 6));
                out.push('|');
                out.push_str(&cell(format!("P{}", a.teacher), 9));
                out.push_str("|\n");
            }
            out
        }
    }
}

pub fn render_answer(set: &SolutionSet) -> String {
    render_solutions(set.iter())
}

pub fn render_solutions<'a>(solutions: impl IntoIterator<Item = &'a Solution>) -> String {
    let mut out = String::new();
    let mut n = 0;
    for (i, s) in solutions.into_iter().enumerate() {
        out.push_str(&render_solution(i + 1, s));
        n = i + 1;
    }
    out.push_str(&format!("\nTotal {n} feasible solutions shown above.\n"));
    out
}
