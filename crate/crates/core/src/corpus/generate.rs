//! Seeded instance generators.
//!
//! Draw order is part of the reproducibility contract: changing the order of
//! calls into [`InstanceRng`] changes every generated corpus.

use serde::{Deserialize, Serialize};

use super::{CorpusError, CourseSpec, SubsetSumInstance, TaskKind, TimeTablingInstance};
use crate::rng::InstanceRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

impl CountRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    fn check(&self, name: &str, allow_zero: bool) -> Result<(), CorpusError> {
        if self.max < self.min {
            return Err(CorpusError::Config(format!(
                "{name}: max {} < min {}",
                self.max, self.min
            )));
        }
        if !allow_zero && self.min == 0 {
            return Err(CorpusError::Config(format!("{name}: minimum must be at least 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeTablingParams {
    pub courses: CountRange,
    pub teachers: CountRange,
    pub rooms: CountRange,
    pub times: CountRange,
    /// Size of each course's allowed time set, clipped to the time pool.
    pub allowed_times: CountRange,
    /// Size of each course's allowed room set, clipped to the room pool.
    pub allowed_rooms: CountRange,
    /// Probability that a course is restricted to exactly one room.
    pub single_room_prob: f64,
}

impl Default for TimeTablingParams {
    fn default() -> Self {
        Self {
            courses: CountRange::new(3, 6),
            teachers: CountRange::new(2, 4),
            rooms: CountRange::new(3, 9),
            times: CountRange::new(4, 6),
            allowed_times: CountRange::new(1, 3),
            allowed_rooms: CountRange::new(1, 3),
            single_room_prob: 0.3,
        }
    }
}

impl TimeTablingParams {
    pub fn validate(&self) -> Result<(), CorpusError> {
        self.courses.check("courses", false)?;
        self.teachers.check("teachers", false)?;
        self.rooms.check("rooms", false)?;
        self.times.check("times", false)?;
        self.allowed_times.check("allowed_times", false)?;
        self.allowed_rooms.check("allowed_rooms", false)?;
        if !(0.0..=1.0).contains(&self.single_room_prob) {
            return Err(CorpusError::Config(format!(
                "single_room_prob {} outside [0, 1]",
                self.single_room_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetSumParams {
    /// Number of elements n.
    pub size: CountRange,
    pub values: ValueRange,
}

impl Default for SubsetSumParams {
    fn default() -> Self {
        Self {
            size: CountRange::new(8, 12),
            values: ValueRange { min: 1, max: 50 },
        }
    }
}

impl SubsetSumParams {
    pub fn validate(&self) -> Result<(), CorpusError> {
        self.size.check("size", false)?;
        if self.values.max < self.values.min {
            return Err(CorpusError::Config("values: max < min".into()));
        }
        let distinct = self.values.max as i128 - self.values.min as i128 + 1;
        if distinct < self.size.max as i128 {
            return Err(CorpusError::Config(format!(
                "value range {}..={} holds {distinct} integers, fewer than n = {}",
                self.values.min, self.values.max, self.size.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum GenParams {
    TimeTabling(TimeTablingParams),
    SubsetSum(SubsetSumParams),
}

impl GenParams {
    pub fn default_for(kind: TaskKind) -> Self {
        match kind {
            TaskKind::TimeTabling => GenParams::TimeTabling(TimeTablingParams::default()),
            TaskKind::SubsetSum => GenParams::SubsetSum(SubsetSumParams::default()),
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            GenParams::TimeTabling(_) => TaskKind::TimeTabling,
            GenParams::SubsetSum(_) => TaskKind::SubsetSum,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        match self {
            GenParams::TimeTabling(p) => p.validate(),
            GenParams::SubsetSum(p) => p.validate(),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<super::Instance, CorpusError> {
        Ok(match self {
            GenParams::TimeTabling(p) => gen_timetabling(p, seed)?.into(),
            GenParams::SubsetSum(p) => gen_subsetsum(p, seed)?.into(),
        })
    }
}

fn draw(rng: &mut InstanceRng, r: CountRange) -> u32 {
    rng.range_inclusive(r.min as i64, r.max as i64) as u32
}

fn draw_set(rng: &mut InstanceRng, sizes: CountRange, pool: u32) -> Vec<u32> {
    let lo = sizes.min.min(pool);
    let hi = sizes.max.min(pool);
    let k = rng.range_inclusive(lo as i64, hi as i64) as usize;
    rng.sample_indices(pool as usize, k)
        .into_iter()
        .map(|v| v as u32)
        .collect()
}

/// Draw order: courses, teachers, rooms, times; then per course: teacher,
/// allowed times, single-room coin, allowed rooms.
pub fn gen_timetabling(params: &TimeTablingParams, seed: u64) -> Result<TimeTablingInstance, CorpusError> {
    params.validate()?;
    let mut rng = InstanceRng::new(seed);
    let num_courses = draw(&mut rng, params.courses);
    let num_teachers = draw(&mut rng, params.teachers);
    let num_rooms = draw(&mut rng, params.rooms);
    let num_times = draw(&mut rng, params.times);
    let courses = (0..num_courses)
        .map(|course_id| {
            let teacher = rng.below(num_teachers as u64) as u32;
            let allowed_times = draw_set(&mut rng, params.allowed_times, num_times);
            let allowed_rooms = if rng.chance(params.single_room_prob) {
                draw_set(&mut rng, CountRange::new(1, 1), num_rooms)
            } else {
                draw_set(&mut rng, params.allowed_rooms, num_rooms)
            };
            CourseSpec {
                course_id,
                allowed_times,
                allowed_rooms,
                teacher,
            }
        })
        .collect();
    let instance = TimeTablingInstance {
        courses,
        num_times,
        num_rooms,
        num_teachers,
        seed,
    };
    debug_assert!(instance.validate().is_ok());
    Ok(instance)
}

/// Draw order: n, then distinct values by rejection, then the size of the
/// witness subset and its members. The target is the witness sum.
pub fn gen_subsetsum(params: &SubsetSumParams, seed: u64) -> Result<SubsetSumInstance, CorpusError> {
    params.validate()?;
    let mut rng = InstanceRng::new(seed);
    let n = draw(&mut rng, params.size) as usize;
    let mut elements: Vec<i64> = Vec::with_capacity(n);
    while elements.len() < n {
        let v = rng.range_inclusive(params.values.min, params.values.max);
        if !elements.contains(&v) {
            elements.push(v);
        }
    }
    let k = rng.range_usize(1, n);
    let target = rng.sample_indices(n, k).into_iter().map(|i| elements[i]).sum();
    Ok(SubsetSumInstance { elements, target, seed })
}
