//! Question text rendering and its inverse.

use std::sync::LazyLock;

use regex::Regex;

use super::{CorpusError, CourseSpec, Instance, SubsetSumInstance, TimeTablingInstance};

pub const ROOM_CONSTRAINT: &str = "- Multiple courses cannot be scheduled in the same time slot and room.";
pub const TEACHER_CONSTRAINT: &str = "- A teacher can only teach one course at a time.";
const SET_PREFIX: &str = "Given the set of unique integers: ";
const TARGET_PREFIX: &str = "Find all subsets that sum exactly to the target: ";

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

pub fn render_question(instance: &Instance) -> String {
    match instance {
        Instance::TimeTabling(i) => render_timetabling(i),
        Instance::SubsetSum(i) => render_subsetsum(i),
    }
}

pub fn render_timetabling(instance: &TimeTablingInstance) -> String {
    let mut out = String::from("Constraints:\n");
    for c in &instance.courses {
        out.push_str(&format!(
            "- Course{} : Time [{}], Room [{}], Teacher [{}]\n",
            c.course_id,
            join(&c.allowed_times),
            join(&c.allowed_rooms),
            c.teacher
        ));
    }
    out.push_str(ROOM_CONSTRAINT);
    out.push('\n');
    out.push_str(TEACHER_CONSTRAINT);
    out
}

pub fn render_subsetsum(instance: &SubsetSumInstance) -> String {
    format!(
        "{SET_PREFIX}{{{}}}\n{TARGET_PREFIX}{}",
        join(&instance.elements),
        instance.target
    )
}

static COURSE_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^- Course(\d+) : Time \[([\d, ]*)\], Room \[([\d, ]*)\], Teacher \[(\d+)\]$").unwrap()
});

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, CorpusError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CorpusError::InvalidInstance(format!("bad integer `{t}` in question")))
        })
        .collect()
}

/// Recovers an instance from rendered question text.
///
/// The text carries no seed and no unused pool members, so the recovered
/// instance has `seed = 0` and pools sized to the largest index mentioned.
pub fn parse_question(text: &str) -> Result<Instance, CorpusError> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix(SET_PREFIX) {
        let (set_line, target_line) = rest
            .split_once('\n')
            .ok_or_else(|| CorpusError::InvalidInstance("missing target line".into()))?;
        let inner = set_line
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| CorpusError::InvalidInstance("element set not in braces".into()))?;
        let target = target_line
            .trim()
            .strip_prefix(TARGET_PREFIX)
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| CorpusError::InvalidInstance("unreadable target line".into()))?;
        let instance = SubsetSumInstance {
            elements: parse_list(inner)?,
            target,
            seed: 0,
        };
        instance.validate()?;
        return Ok(Instance::SubsetSum(instance));
    }
    let body = text
        .strip_prefix("Constraints:")
        .ok_or_else(|| CorpusError::InvalidInstance("unrecognised question format".into()))?;
    let mut courses = Vec::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if line == ROOM_CONSTRAINT || line == TEACHER_CONSTRAINT {
            continue;
        }
        let caps = COURSE_LINE
            .captures(line)
            .ok_or_else(|| CorpusError::InvalidInstance(format!("unrecognised constraint line `{line}`")))?;
        courses.push(CourseSpec {
            course_id: caps[1].parse().map_err(|_| CorpusError::InvalidInstance(line.into()))?,
            allowed_times: parse_list(&caps[2])?,
            allowed_rooms: parse_list(&caps[3])?,
            teacher: caps[4].parse().map_err(|_| CorpusError::InvalidInstance(line.into()))?,
        });
    }
    let pool = |f: &dyn Fn(&CourseSpec) -> u32| courses.iter().map(f).max().map_or(0, |m| m + 1);
    let num_times = pool(&|c| c.allowed_times.iter().copied().max().unwrap_or(0));
    let num_rooms = pool(&|c| c.allowed_rooms.iter().copied().max().unwrap_or(0));
    let num_teachers = pool(&|c| c.teacher);
    let instance = TimeTablingInstance {
        courses,
        num_times,
        num_rooms,
        num_teachers,
        seed: 0,
    };
    instance.validate()?;
    Ok(Instance::TimeTabling(instance))
}
