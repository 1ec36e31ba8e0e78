//! Built-in consistency checks: worked oracle examples, backtracking against
//! exhaustive enumeration on seeded instances, and metric goldens.
//!
//! Shared by the `selftest` command and the acceptance suite.

use crate::corpus::{
    gen_subsetsum, gen_timetabling, CourseSpec, ScheduleSolution, SubsetSolution, SubsetSumInstance, SubsetSumParams,
    TaskKind, TimeTablingInstance, TimeTablingParams,
};
use crate::metrics::{self, PerfKind, ScoreRecord};
use crate::oracle::{self, Solution, SolutionSet};
use crate::rng::derive_seed;

pub fn worked_subsetsum() -> SubsetSumInstance {
    SubsetSumInstance {
        elements: vec![18, 25, 16, 45, 48, 40, 38, 14, 22, 8],
        target: 62,
        seed: 0,
    }
}

pub fn worked_subsetsum_answer() -> Vec<SubsetSolution> {
    [
        vec![8, 14, 18, 22],
        vec![8, 14, 40],
        vec![8, 16, 38],
        vec![14, 48],
        vec![22, 40],
    ]
    .into_iter()
    .map(SubsetSolution::new)
    .collect()
}

pub fn worked_timetabling() -> TimeTablingInstance {
    let c = |id, t: &[u32], r: &[u32], p| CourseSpec {
        course_id: id,
        allowed_times: t.to_vec(),
        allowed_rooms: r.to_vec(),
        teacher: p,
    };
    TimeTablingInstance {
        courses: vec![c(0, &[3, 4], &[8], 2), c(1, &[0, 4], &[3], 2), c(2, &[3, 4], &[0], 1)],
        num_times: 5,
        num_rooms: 9,
        num_teachers: 3,
        seed: 0,
    }
}

/// The three listed schedules; the full answer has six.
pub fn worked_timetabling_listed() -> Vec<ScheduleSolution> {
    [
        [(0, 3, 8, 2), (1, 0, 3, 2), (2, 3, 0, 1)],
        [(0, 3, 8, 2), (1, 0, 3, 2), (2, 4, 0, 1)],
        [(0, 3, 8, 2), (1, 4, 3, 2), (2, 4, 0, 1)],
    ]
    .into_iter()
    .map(ScheduleSolution::from_triples)
    .collect()
}

pub const WORKED_TIMETABLING_TOTAL: usize = 6;

/// `[8, 14, 18, 22], [8, 14, 40], ...` in canonical order.
pub fn format_subsets(set: &SolutionSet) -> String {
    set.iter()
        .filter_map(Solution::as_subset)
        .map(|s| format!("{:?}", s.members))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub subsetsum_instances: u64,
    pub timetabling_instances: u64,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            subsetsum_instances: 1000,
            timetabling_instances: 500,
            seed: 0,
        }
    }
}

pub fn check_worked_subsetsum() -> Check {
    let name = "worked subset-sum example";
    match oracle::solve_subsetsum(&worked_subsetsum()) {
        Ok(set) => {
            let expected =
                SolutionSet::from_solutions(TaskKind::SubsetSum, worked_subsetsum_answer()).expect("one kind");
            Check::new(name, set == expected, format_subsets(&set))
        }
        Err(e) => Check::new(name, false, e.to_string()),
    }
}

pub fn check_worked_timetabling() -> Check {
    let name = "worked timetabling example";
    let inst = worked_timetabling();
    match (oracle::solve_timetabling(&inst), oracle::brute_force_timetabling(&inst)) {
        (Ok(set), Ok(brute)) => {
            let listed = worked_timetabling_listed().into_iter().all(|s| set.contains(&s.into()));
            let ok = listed && set.len() == WORKED_TIMETABLING_TOTAL && set == brute;
            Check::new(
                name,
                ok,
                format!("{} solutions, listed schedules present: {listed}", set.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => Check::new(name, false, e.to_string()),
    }
}

/// Backtracking against exhaustive enumeration on seeded default-parameter
/// instances. Returns the check and the ids of mismatching seeds.
pub fn check_brute_force(options: &SelftestOptions) -> Check {
    let mut mismatches = Vec::new();
    let ss = SubsetSumParams::default();
    for i in 0..options.subsetsum_instances {
        let seed = derive_seed(options.seed, i);
        let ok = gen_subsetsum(&ss, seed)
            .ok()
            .and_then(|inst| Some(oracle::solve_subsetsum(&inst).ok()? == oracle::brute_force_subsetsum(&inst).ok()?));
        if ok != Some(true) {
            mismatches.push(format!("subsetsum seed {seed}"));
        }
    }
    let tt = TimeTablingParams::default();
    for i in 0..options.timetabling_instances {
        let seed = derive_seed(options.seed ^ 0x5454, i);
        let ok = gen_timetabling(&tt, seed).ok().and_then(|inst| {
            Some(oracle::solve_timetabling(&inst).ok()? == oracle::brute_force_timetabling(&inst).ok()?)
        });
        if ok != Some(true) {
            mismatches.push(format!("timetabling seed {seed}"));
        }
    }
    let total = options.subsetsum_instances + options.timetabling_instances;
    let detail = if mismatches.is_empty() {
        format!("{total} instances agree")
    } else {
        format!("{} of {total} disagree: {}", mismatches.len(), mismatches.join(", "))
    };
    Check::new(
        "backtracking equals exhaustive enumeration",
        mismatches.is_empty(),
        detail,
    )
}

fn labelled(labels: &str) -> SolutionSet {
    let code = |c: char| match c {
        'x' => 90,
        'y' => 91,
        c => c as i64 - 'a' as i64 + 1,
    };
    SolutionSet::from_solutions(
        TaskKind::SubsetSum,
        labels.chars().map(|c| SubsetSolution::new(vec![code(c)])),
    )
    .expect("one kind")
}

fn record(confidence: f64, recall: f64) -> ScoreRecord {
    ScoreRecord {
        item_id: String::new(),
        precision: None,
        recall,
        confidence: Some(confidence),
        behavioral: None,
        level: None,
        answer_count: 0,
        truth_count: 0,
        reasoning_length: None,
        stages: vec![],
    }
}

/// Hand-evaluated metric fixtures.
pub fn check_metric_goldens() -> Check {
    let truth = labelled("abcd");
    let mut failures = Vec::new();
    let mut expect = |what: &str, ok: bool| {
        if !ok {
            failures.push(what.to_owned());
        }
    };
    let partial = labelled("abx");
    expect(
        "precision",
        metrics::precision(&partial, &truth).ok() == Some(Some(2.0 / 3.0)),
    );
    expect("recall", metrics::recall(&partial, &truth).ok() == Some(0.5));
    expect(
        "empty precision",
        metrics::precision(&labelled(""), &truth).ok() == Some(None),
    );
    match metrics::behavior(&partial, &labelled("acy"), &truth) {
        Ok(b) => {
            expect("csr", b.csr == Some(0.5));
            expect("esc", b.esc == Some(1.0));
            expect("nsd", b.nsd == Some(0.25));
        }
        Err(_) => expect("behavior", false),
    }
    let one_bin = [record(0.8, 0.5), record(0.6, 0.5)];
    expect(
        "one-bin ece",
        metrics::ece(&one_bin, 1, PerfKind::Recall).is_ok_and(|v| (v - 0.2).abs() < 1e-12),
    );
    let detail = if failures.is_empty() {
        "all fixtures match".to_owned()
    } else {
        format!("mismatched: {}", failures.join(", "))
    };
    Check::new("metric goldens", failures.is_empty(), detail)
}

pub fn run_selftest(options: &SelftestOptions) -> Vec<Check> {
    vec![
        check_worked_subsetsum(),
        check_worked_timetabling(),
        check_brute_force(options),
        check_metric_goldens(),
    ]
}
