use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::oracle::SolutionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    TimeTabling,
    SubsetSum,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::TimeTabling => "timetabling",
            TaskKind::SubsetSum => "subsetsum",
        }
    }

    pub(crate) fn id_prefix(self) -> &'static str {
        match self {
            TaskKind::TimeTabling => "tt",
            TaskKind::SubsetSum => "ss",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "timetabling" => Ok(TaskKind::TimeTabling),
            "subsetsum" => Ok(TaskKind::SubsetSum),
            other => Err(CorpusError::Config(format!("unknown task kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseSpec {
    pub course_id: u32,
    /// Ascending, distinct, non-empty.
    pub allowed_times: Vec<u32>,
    /// Ascending, distinct, non-empty.
    pub allowed_rooms: Vec<u32>,
    pub teacher: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeTablingInstance {
    pub courses: Vec<CourseSpec>,
    pub num_times: u32,
    pub num_rooms: u32,
    pub num_teachers: u32,
    pub seed: u64,
}

impl TimeTablingInstance {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidInstance(msg));
        if self.courses.is_empty() {
            return bad("timetabling instance has no courses".into());
        }
        for (idx, course) in self.courses.iter().enumerate() {
            if course.course_id as usize != idx {
                return bad(format!("course at position {idx} has id {}", course.course_id));
            }
            if course.teacher >= self.num_teachers {
                return bad(format!("Course{idx}: teacher {} outside pool", course.teacher));
            }
            for (name, set, pool) in [
                ("times", &course.allowed_times, self.num_times),
                ("rooms", &course.allowed_rooms, self.num_rooms),
            ] {
                if set.is_empty() {
                    return bad(format!("Course{idx}: empty allowed {name}"));
                }
                if !set.windows(2).all(|w| w[0] < w[1]) {
                    return bad(format!("Course{idx}: allowed {name} not ascending/distinct"));
                }
                if set.iter().any(|&v| v >= pool) {
                    return bad(format!("Course{idx}: allowed {name} outside global pool"));
                }
            }
        }
        Ok(())
    }

    /// Size of the full assignment product, saturating.
    pub fn candidate_count(&self) -> u64 {
        self.courses.iter().fold(1u64, |acc, c| {
            acc.saturating_mul((c.allowed_times.len() * c.allowed_rooms.len()) as u64)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSumInstance {
    /// Pairwise distinct, in generation order.
    pub elements: Vec<i64>,
    pub target: i64,
    pub seed: u64,
}

impl SubsetSumInstance {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.elements.is_empty() {
            return Err(CorpusError::InvalidInstance(
                "subset-sum instance has no elements".into(),
            ));
        }
        let mut sorted = self.elements.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CorpusError::InvalidInstance(
                "subset-sum elements are not distinct".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Instance {
    TimeTabling(TimeTablingInstance),
    SubsetSum(SubsetSumInstance),
}

impl Instance {
    pub fn kind(&self) -> TaskKind {
        match self {
            Instance::TimeTabling(_) => TaskKind::TimeTabling,
            Instance::SubsetSum(_) => TaskKind::SubsetSum,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Instance::TimeTabling(i) => i.seed,
            Instance::SubsetSum(i) => i.seed,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        match self {
            Instance::TimeTabling(i) => i.validate(),
            Instance::SubsetSum(i) => i.validate(),
        }
    }
}

impl From<TimeTablingInstance> for Instance {
    fn from(i: TimeTablingInstance) -> Self {
        Instance::TimeTabling(i)
    }
}

impl From<SubsetSumInstance> for Instance {
    fn from(i: SubsetSumInstance) -> Self {
        Instance::SubsetSum(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub time: u32,
    pub room: u32,
    pub teacher: u32,
}

/// One schedule: course id to its (time, room, teacher) triple.
///
/// Ordering is lexicographic over courses by id, then time, room, teacher,
/// which is the canonical order of solution sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScheduleSolution {
    pub assignments: BTreeMap<u32, Assignment>,
}

impl ScheduleSolution {
    pub fn from_triples(triples: impl IntoIterator<Item = (u32, u32, u32, u32)>) -> Self {
        let assignments = triples
            .into_iter()
            .map(|(course, time, room, teacher)| (course, Assignment { time, room, teacher }))
            .collect();
        Self { assignments }
    }
}

#[derive(Serialize, Deserialize)]
struct AssignmentRow {
    course: u32,
    time: u32,
    room: u32,
    teacher: u32,
}

impl Serialize for ScheduleSolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<AssignmentRow> = self
            .assignments
            .iter()
            .map(|(&course, a)| AssignmentRow {
                course,
                time: a.time,
                room: a.room,
                teacher: a.teacher,
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScheduleSolution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<AssignmentRow>::deserialize(d)?;
        let mut assignments = BTreeMap::new();
        for r in rows {
            let prev = assignments.insert(
                r.course,
                Assignment {
                    time: r.time,
                    room: r.room,
                    teacher: r.teacher,
                },
            );
            if prev.is_some() {
                return Err(serde::de::Error::custom(format!("course {} assigned twice", r.course)));
            }
        }
        Ok(Self { assignments })
    }
}

/// Members are kept ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<i64>", from = "Vec<i64>")]
pub struct SubsetSolution {
    pub members: Vec<i64>,
}

impl From<Vec<i64>> for SubsetSolution {
    fn from(members: Vec<i64>) -> Self {
        Self::new(members)
    }
}

impl From<SubsetSolution> for Vec<i64> {
    fn from(s: SubsetSolution) -> Self {
        s.members
    }
}

impl SubsetSolution {
    pub fn new(mut members: Vec<i64>) -> Self {
        members.sort_unstable();
        Self { members }
    }

    pub fn sum(&self) -> i64 {
        self.members.iter().sum()
    }
}

/// Inclusive solution-count range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Band {
    pub min: usize,
    pub max: usize,
}

impl Band {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, count: usize) -> bool {
        (self.min..=self.max).contains(&count)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexityLevel {
    pub level_index: usize,
    pub band: Band,
}

/// Disjoint, ascending solution-count bands. Level `i` is `bands[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrataConfig {
    pub bands: Vec<Band>,
}

impl StrataConfig {
    pub fn new(bands: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, CorpusError> {
        let strata = Self {
            bands: bands.into_iter().map(|(a, b)| Band::new(a, b)).collect(),
        };
        strata.validate()?;
        Ok(strata)
    }

    pub fn default_for(kind: TaskKind) -> Self {
        let bands: &[(usize, usize)] = match kind {
            TaskKind::TimeTabling => &[
                (1, 2),
                (3, 5),
                (6, 10),
                (11, 20),
                (21, 50),
                (51, 100),
                (101, 200),
                (201, 400),
                (401, 800),
                (801, 1600),
            ],
            TaskKind::SubsetSum => &[(1, 1), (2, 2), (3, 4), (5, 7), (8, 12), (13, 20), (21, 40)],
        };
        Self {
            bands: bands.iter().map(|&(a, b)| Band::new(a, b)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.bands.is_empty() {
            return Err(CorpusError::Config("strata config has no bands".into()));
        }
        for b in &self.bands {
            if b.min == 0 || b.min > b.max {
                return Err(CorpusError::Config(format!("invalid band {b}")));
            }
        }
        if self.bands.windows(2).any(|w| w[0].max >= w[1].min) {
            return Err(CorpusError::Config(
                "strata bands must be disjoint and ascending".into(),
            ));
        }
        Ok(())
    }

    /// Largest solution count any band accepts.
    pub fn ceiling(&self) -> usize {
        self.bands.last().map_or(0, |b| b.max)
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkItem {
    pub item_id: String,
    pub task_kind: TaskKind,
    pub instance: Instance,
    pub question_text: String,
    pub ground_truth: SolutionSet,
    pub level: ComplexityLevel,
}

impl BenchmarkItem {
    pub fn validate(&self) -> Result<(), CorpusError> {
        self.instance.validate()?;
        if self.instance.kind() != self.task_kind || self.ground_truth.kind() != self.task_kind {
            return Err(CorpusError::Integrity(format!(
                "{}: task kind disagrees between item, instance and ground truth",
                self.item_id
            )));
        }
        if self.ground_truth.is_empty() {
            return Err(CorpusError::Integrity(format!("{}: empty ground truth", self.item_id)));
        }
        if !self.level.band.contains(self.ground_truth.len()) {
            return Err(CorpusError::Integrity(format!(
                "{}: {} solutions outside band {}",
                self.item_id,
                self.ground_truth.len(),
                self.level.band
            )));
        }
        Ok(())
    }
}
