//! Synthetic cohorts with planted engagement and grade structure.
//!
//! Every draw comes from one ChaCha8 stream seeded by `CohortSpec::seed`,
//! so a `CohortSpec` reproduces byte-identical files on any platform.

use engage_miner_core::engagement::{
    AssignmentSchedule, EventKind, EventRecord, GradeRecord, Level, Timestamp,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::{self, CourseConfig};

const HOUR: i64 = 3600;
const DAY: i64 = 24 * HOUR;

/// Behaviour of one engagement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelProfile {
    /// Inclusive event-count ranges for logins, content reads, forum
    /// reads, forum posts and quiz reviews.
    pub counts: [(u32, u32); 5],
    /// Inclusive range of hours from posting to submission.
    pub submit_hours: (f64, f64),
    /// `(mean, sd)` of each grade in grade-field order. Draws are
    /// truncated to two standard deviations and clamped to `[0, 100]`.
    pub grades: [(f64, f64); 7],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub n_students: usize,
    pub seed: u64,
    /// Fractions of L, M and H students; sums to 1.
    pub level_mix: [f64; 3],
    /// Profiles of L, M and H.
    pub profiles: [LevelProfile; 3],
    /// Probability that a student's grades follow their own level's
    /// model. Otherwise they follow a level drawn afresh from the mix,
    /// independent of engagement.
    pub implication_strength: f64,
    pub course_start: Timestamp,
    pub course_days: i64,
    pub schedule: AssignmentSchedule,
}

impl Default for CohortSpec {
    fn default() -> Self {
        // 2024-01-08T00:00:00Z, assignments on the following Mondays 09:00
        let start = 1_704_672_000;
        CohortSpec {
            n_students: 200,
            seed: 7,
            level_mix: [0.3, 0.4, 0.3],
            profiles: [
                LevelProfile {
                    counts: [(5, 30), (10, 60), (0, 8), (0, 1), (0, 1)],
                    submit_hours: (170.0, 300.0),
                    grades: [(58.0, 6.0); 7],
                },
                LevelProfile {
                    counts: [(45, 90), (90, 180), (12, 30), (2, 4), (2, 4)],
                    submit_hours: (60.0, 150.0),
                    grades: [(76.0, 4.0); 7],
                },
                LevelProfile {
                    counts: [(110, 180), (220, 360), (36, 60), (6, 10), (5, 9)],
                    submit_hours: (2.0, 48.0),
                    grades: [(93.0, 2.0); 7],
                },
            ],
            implication_strength: 1.0,
            course_start: Timestamp(start),
            course_days: 98,
            schedule: AssignmentSchedule {
                posted: [
                    Timestamp(start + 7 * DAY + 9 * HOUR),
                    Timestamp(start + 35 * DAY + 9 * HOUR),
                    Timestamp(start + 63 * DAY + 9 * HOUR),
                ],
            },
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::CohortSpec(m));
        if self.level_mix.iter().any(|f| !(0.0..=1.0).contains(f))
            || (self.level_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad(format!(
                "level_mix {:?} must be fractions summing to 1",
                self.level_mix
            ));
        }
        if !(0.0..=1.0).contains(&self.implication_strength) {
            return bad(format!(
                "implication_strength {} outside [0, 1]",
                self.implication_strength
            ));
        }
        if self.course_days <= 0 {
            return bad("course_days must be positive".into());
        }
        for (p, level) in self.profiles.iter().zip(Level::ALL) {
            if p.counts.iter().any(|(lo, hi)| lo > hi) {
                return bad(format!("{level}: count range with min above max"));
            }
            let (lo, hi) = p.submit_hours;
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!(
                    "{level}: submit_hours must be ordered and nonnegative"
                ));
            }
            if p.grades
                .iter()
                .any(|&(mu, sd)| !(mu.is_finite() && sd.is_finite() && sd >= 0.0))
            {
                return bad(format!(
                    "{level}: grade model needs finite means and nonnegative sds"
                ));
            }
        }
        Ok(())
    }
}

/// A generated cohort. Events are sorted by time, then student.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub events: Vec<EventRecord>,
    pub grades: Vec<GradeRecord>,
    /// Intended level of each student, by student id.
    pub truth: Vec<(String, Level)>,
    pub schedule: AssignmentSchedule,
}

impl Cohort {
    pub fn events_csv(&self) -> Vec<u8> {
        io::write_event_log(&self.events)
    }

    pub fn grades_csv(&self) -> Vec<u8> {
        io::write_grades(&self.grades)
    }

    pub fn truth_csv(&self) -> Vec<u8> {
        io::write_levels(
            io::TRUTH_FIELDS,
            self.truth.iter().map(|(id, l)| (id.as_str(), *l)),
        )
    }

    pub fn course_toml(&self) -> String {
        CourseConfig::from_schedule(&self.schedule).to_toml()
    }
}

/// Level counts rounded from the mix; H absorbs the remainder.
fn level_counts(n: usize, mix: [f64; 3]) -> [usize; 3] {
    let l = ((n as f64) * mix[0]).round() as usize;
    let m = (((n as f64) * mix[1]).round() as usize).min(n - l.min(n));
    let l = l.min(n);
    [l, m, n - l - m]
}

fn draw_level(rng: &mut ChaCha8Rng, mix: [f64; 3]) -> Level {
    let u: f64 = rng.random();
    if u < mix[0] {
        Level::L
    } else if u < mix[0] + mix[1] {
        Level::M
    } else {
        Level::H
    }
}

fn draw_grade(rng: &mut ChaCha8Rng, (mean, sd): (f64, f64)) -> f64 {
    let z = loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= 2.0 {
            break z;
        }
    };
    ((mean + sd * z).clamp(0.0, 100.0) * 10.0).round() / 10.0
}

fn location(kind: EventKind, rng: &mut ChaCha8Rng) -> String {
    match kind {
        EventKind::Login => "/course".into(),
        EventKind::ContentRead => format!("/course/content/{}", rng.random_range(1..=12)),
        EventKind::ForumRead => format!("/course/forum/{}", rng.random_range(1..=8)),
        EventKind::ForumPost => format!("/course/forum/{}/post", rng.random_range(1..=8)),
        EventKind::QuizReview => "/course/quiz/1/review".into(),
        EventKind::AssignmentSubmit(n) => format!("/course/assignment/{}", n + 1),
    }
}

fn event(rng: &mut ChaCha8Rng, at: i64, kind: EventKind, student: &str) -> EventRecord {
    EventRecord {
        event_date: Timestamp(at),
        event_type: kind.token().into(),
        event_location: location(kind, rng),
        session_start: Some(Timestamp(at - rng.random_range(0..=1800))),
        session_end: Some(Timestamp(at + rng.random_range(60..=3600))),
        student_id: student.into(),
    }
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = level_counts(spec.n_students, spec.level_mix);
    let mut levels: Vec<Level> = Level::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&l, c)| std::iter::repeat_n(l, c))
        .collect();
    levels.shuffle(&mut rng);

    let kinds = [
        EventKind::Login,
        EventKind::ContentRead,
        EventKind::ForumRead,
        EventKind::ForumPost,
        EventKind::QuizReview,
    ];
    let span = spec.course_days * DAY;
    let mut events = Vec::new();
    let mut grades = Vec::with_capacity(spec.n_students);
    let mut truth = Vec::with_capacity(spec.n_students);
    for (i, &level) in levels.iter().enumerate() {
        let id = format!("s{i:04}");
        let profile = &spec.profiles[level as usize];
        for (kind, &(lo, hi)) in kinds.iter().zip(&profile.counts) {
            for _ in 0..rng.random_range(lo..=hi) {
                let at = spec.course_start.0 + rng.random_range(0..span);
                events.push(event(&mut rng, at, *kind, &id));
            }
        }
        for (n, posted) in spec.schedule.posted.iter().enumerate() {
            let (lo, hi) = profile.submit_hours;
            let hours = if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            let at = posted.0 + (hours * HOUR as f64).round() as i64;
            events.push(event(&mut rng, at, EventKind::AssignmentSubmit(n), &id));
        }
        let grade_level = if rng.random_bool(spec.implication_strength) {
            level
        } else {
            draw_level(&mut rng, spec.level_mix)
        };
        let model = &spec.profiles[grade_level as usize].grades;
        let mut scores = [0.0; 7];
        for (s, &m) in scores.iter_mut().zip(model) {
            *s = draw_grade(&mut rng, m);
        }
        grades.push(GradeRecord {
            student_id: id.clone(),
            scores,
        });
        truth.push((id, level));
    }
    events.sort_by(|a, b| {
        a.event_date
            .cmp(&b.event_date)
            .then_with(|| a.student_id.cmp(&b.student_id))
    });
    Ok(Cohort {
        events,
        grades,
        truth,
        schedule: spec.schedule,
    })
}
