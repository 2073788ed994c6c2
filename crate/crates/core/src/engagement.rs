//! Engagement records, metrics and the merged student feature vector.
//!
//! Event vocabulary: `Login`, `ContentRead`, `ForumRead`, `ForumPost`,
//! `QuizReview`, and `AssignmentSubmit1` / `2` / `3`. Other event types are
//! kept in sequences but contribute to no metric.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::db::TransactionDb;
use crate::error::{Error, Result};
use crate::item::{Item, Value};

/// Seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn hours_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 3600.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub event_date: Timestamp,
    pub event_type: String,
    pub event_location: String,
    pub session_start: Option<Timestamp>,
    pub session_end: Option<Timestamp>,
    pub student_id: String,
}

impl EventRecord {
    /// `session_start <= event_date <= session_end` for whichever bounds
    /// are present.
    pub fn validate(&self) -> Result<()> {
        let after_start = self.session_start.is_none_or(|s| s <= self.event_date);
        let before_end = self.session_end.is_none_or(|e| self.event_date <= e);
        if after_start && before_end {
            Ok(())
        } else {
            Err(Error::SessionWindow(self.student_id.clone()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Login,
    ContentRead,
    ForumRead,
    ForumPost,
    QuizReview,
    /// Submission of assignment 1, 2 or 3 (stored 0-based).
    AssignmentSubmit(usize),
}

impl EventKind {
    pub fn classify(token: &str) -> Option<EventKind> {
        Some(match token {
            "Login" => EventKind::Login,
            "ContentRead" => EventKind::ContentRead,
            "ForumRead" => EventKind::ForumRead,
            "ForumPost" => EventKind::ForumPost,
            "QuizReview" => EventKind::QuizReview,
            "AssignmentSubmit1" => EventKind::AssignmentSubmit(0),
            "AssignmentSubmit2" => EventKind::AssignmentSubmit(1),
            "AssignmentSubmit3" => EventKind::AssignmentSubmit(2),
            _ => return None,
        })
    }

    pub fn token(self) -> &'static str {
        match self {
            EventKind::Login => "Login",
            EventKind::ContentRead => "ContentRead",
            EventKind::ForumRead => "ForumRead",
            EventKind::ForumPost => "ForumPost",
            EventKind::QuizReview => "QuizReview",
            EventKind::AssignmentSubmit(0) => "AssignmentSubmit1",
            EventKind::AssignmentSubmit(1) => "AssignmentSubmit2",
            EventKind::AssignmentSubmit(_) => "AssignmentSubmit3",
        }
    }
}

/// Posting times of the three assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignmentSchedule {
    pub posted: [Timestamp; 3],
}

/// The nine engagement metrics, raw (before discretization).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngagementMetrics {
    pub num_logins: u64,
    pub num_content_reads: u64,
    pub num_forum_reads: u64,
    pub num_forum_posts: u64,
    pub num_quiz_reviews: u64,
    /// Hours from posting to (last) submission; `None` if never submitted.
    pub assign_dur_h: [Option<f64>; 3],
    /// Mean of the present durations.
    pub avg_assign_dur_h: Option<f64>,
}

/// Column names of the nine metrics, in feature order.
pub const METRIC_FIELDS: [&str; 9] = [
    "num_logins",
    "num_content_reads",
    "num_forum_reads",
    "num_forum_posts",
    "num_quiz_reviews",
    "assign1_dur_h",
    "assign2_dur_h",
    "assign3_dur_h",
    "avg_assign_dur_h",
];

/// Item attribute names of the nine metrics.
pub const METRIC_ATTRIBUTES: [&str; 9] = [
    "NumLogins",
    "NumContentReads",
    "NumForumReads",
    "NumForumPosts",
    "NumQuizReviews",
    "Assign1Dur",
    "Assign2Dur",
    "Assign3Dur",
    "AvgAssignDur",
];

/// Indices of the frequency-count metrics within [`METRIC_FIELDS`].
pub const COUNT_METRICS: [usize; 5] = [0, 1, 2, 3, 4];

impl EngagementMetrics {
    /// Metric values in feature order; absent durations are `None`.
    pub fn values(&self) -> [Option<f64>; 9] {
        [
            Some(self.num_logins as f64),
            Some(self.num_content_reads as f64),
            Some(self.num_forum_reads as f64),
            Some(self.num_forum_posts as f64),
            Some(self.num_quiz_reviews as f64),
            self.assign_dur_h[0],
            self.assign_dur_h[1],
            self.assign_dur_h[2],
            self.avg_assign_dur_h,
        ]
    }

    pub fn from_values(v: [Option<f64>; 9]) -> Self {
        let count = |x: Option<f64>| x.unwrap_or(0.0) as u64;
        EngagementMetrics {
            num_logins: count(v[0]),
            num_content_reads: count(v[1]),
            num_forum_reads: count(v[2]),
            num_forum_posts: count(v[3]),
            num_quiz_reviews: count(v[4]),
            assign_dur_h: [v[5], v[6], v[7]],
            avg_assign_dur_h: v[8],
        }
    }
}

/// Metrics of one student's events. The caller passes events of a single
/// student. The last submission of each assignment counts; a submission
/// before the posting time counts as zero hours.
pub fn compute_engagement_metrics(
    events: &[EventRecord],
    schedule: &AssignmentSchedule,
) -> EngagementMetrics {
    let mut m = EngagementMetrics::default();
    let mut last_submit: [Option<Timestamp>; 3] = [None; 3];
    for e in events {
        match EventKind::classify(&e.event_type) {
            Some(EventKind::Login) => m.num_logins += 1,
            Some(EventKind::ContentRead) => m.num_content_reads += 1,
            Some(EventKind::ForumRead) => m.num_forum_reads += 1,
            Some(EventKind::ForumPost) => m.num_forum_posts += 1,
            Some(EventKind::QuizReview) => m.num_quiz_reviews += 1,
            // None orders below every Some
            Some(EventKind::AssignmentSubmit(n)) => {
                last_submit[n] = last_submit[n].max(Some(e.event_date))
            }
            None => {}
        }
    }
    for (n, submit) in last_submit.iter().enumerate() {
        m.assign_dur_h[n] = submit.map(|t| {
            let h = t.hours_since(schedule.posted[n]);
            if h < 0.0 {
                0.0
            } else {
                h
            }
        });
    }
    let present: Vec<f64> = m.assign_dur_h.iter().flatten().copied().collect();
    if !present.is_empty() {
        m.avg_assign_dur_h = Some(present.iter().sum::<f64>() / present.len() as f64);
    }
    m
}

/// Rounds a nonnegative value to the nearest multiple of 10, halves up.
pub fn discretize(value: f64) -> Result<i64> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::DiscretizeDomain(value));
    }
    // truncation is floor for nonnegative values
    Ok(((value / 10.0 + 0.5) as i64) * 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    L,
    M,
    H,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::L, Level::M, Level::H];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::L => "L",
            Level::M => "M",
            Level::H => "H",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        match s {
            "L" => Some(Level::L),
            "M" => Some(Level::M),
            "H" => Some(Level::H),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const GRADE_FIELDS: [&str; 7] = [
    "assignment1",
    "assignment2",
    "assignment3",
    "quiz1",
    "midterm",
    "final_exam",
    "course_grade",
];

pub const GRADE_ATTRIBUTES: [&str; 7] = [
    "Assignment1",
    "Assignment2",
    "Assignment3",
    "Quiz1",
    "Midterm",
    "FinalExam",
    "CourseGrade",
];

pub const COURSE_GRADE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradeRecord {
    pub student_id: String,
    /// Scores in [`GRADE_FIELDS`] order.
    pub scores: [f64; 7],
}

impl GradeRecord {
    pub fn validate(&self) -> Result<()> {
        for (field, &value) in GRADE_FIELDS.iter().zip(&self.scores) {
            if !(0.0..=100.0).contains(&value) {
                return Err(Error::ScoreOutOfRange {
                    student: self.student_id.clone(),
                    field,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn course_grade(&self) -> f64 {
        self.scores[COURSE_GRADE]
    }
}

/// How grades become item values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradeBucketing {
    /// The grade rounded to the nearest 10.
    Exact10s,
    /// The rounded grade mapped to `0-49`, `50-69`, `70-89` or `90+`.
    #[default]
    Banded,
}

pub fn grade_value(score: f64, mode: GradeBucketing) -> Result<Value> {
    let rounded = discretize(score)?;
    Ok(match mode {
        GradeBucketing::Exact10s => Value::Int(rounded),
        GradeBucketing::Banded => Value::Label(grade_band(rounded).into()),
    })
}

pub fn grade_band(rounded: i64) -> &'static str {
    match rounded {
        90.. => "90+",
        70..=89 => "70-89",
        50..=69 => "50-69",
        _ => "0-49",
    }
}

/// Column names of the 18-field dataset.
pub const FEATURE_FIELDS: [&str; 18] = [
    "student_id",
    "num_logins",
    "num_content_reads",
    "num_forum_reads",
    "num_forum_posts",
    "num_quiz_reviews",
    "assign1_dur_h",
    "assign2_dur_h",
    "assign3_dur_h",
    "avg_assign_dur_h",
    "engagement_level",
    "assignment1",
    "assignment2",
    "assignment3",
    "quiz1",
    "midterm",
    "final_exam",
    "course_grade",
];

pub const LEVEL_ATTRIBUTE: &str = "EngagementLevel";

/// One merged, discretized student record. Absent values (a missing
/// submission, or the missing side of a partial record) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentFeatureVector {
    pub student_id: String,
    pub metrics: [Option<i64>; 9],
    pub level: Option<Level>,
    pub grades: [Option<Value>; 7],
}

impl StudentFeatureVector {
    /// The 18 cells in [`FEATURE_FIELDS`] order; absent values are empty.
    pub fn cells(&self) -> [String; 18] {
        let mut out: [String; 18] = Default::default();
        out[0] = self.student_id.clone();
        for (i, m) in self.metrics.iter().enumerate() {
            out[1 + i] = m.map(|v| v.to_string()).unwrap_or_default();
        }
        out[10] = self.level.map(|l| l.to_string()).unwrap_or_default();
        for (i, g) in self.grades.iter().enumerate() {
            out[11 + i] = g.as_ref().map(|v| v.to_string()).unwrap_or_default();
        }
        out
    }

    /// Items of this record; the student id is the record id, not an item.
    pub fn items(&self) -> Vec<Item> {
        let mut items = Vec::new();
        for (attr, m) in METRIC_ATTRIBUTES.iter().zip(&self.metrics) {
            if let Some(v) = m {
                items.push(Item::new(*attr, *v));
            }
        }
        if let Some(l) = self.level {
            items.push(Item::new(LEVEL_ATTRIBUTE, l.as_str()));
        }
        for (attr, g) in GRADE_ATTRIBUTES.iter().zip(&self.grades) {
            if let Some(v) = g {
                items.push(Item::new(*attr, v.clone()));
            }
        }
        items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReconciliationKind {
    /// Grades present, no events.
    MissingEvents,
    /// Events present, no grades.
    MissingGrades,
}

impl ReconciliationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReconciliationKind::MissingEvents => "missing_events",
            ReconciliationKind::MissingGrades => "missing_grades",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ReconciliationEntry {
    pub student_id: String,
    pub kind: ReconciliationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssembleOptions {
    pub bucketing: GradeBucketing,
    /// Keep students that appear on only one side, with the other side
    /// left absent.
    pub keep_partial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Sorted by student id.
    pub vectors: Vec<StudentFeatureVector>,
    pub reconciliation: Vec<ReconciliationEntry>,
}

/// Students whose events and grades do not pair up.
pub fn reconcile<'a>(
    with_events: impl IntoIterator<Item = &'a str>,
    with_grades: impl IntoIterator<Item = &'a str>,
) -> Vec<ReconciliationEntry> {
    let events: BTreeSet<&str> = with_events.into_iter().collect();
    let grades: BTreeSet<&str> = with_grades.into_iter().collect();
    let mut out: Vec<ReconciliationEntry> = grades
        .difference(&events)
        .map(|id| ReconciliationEntry {
            student_id: (*id).into(),
            kind: ReconciliationKind::MissingEvents,
        })
        .chain(events.difference(&grades).map(|id| ReconciliationEntry {
            student_id: (*id).into(),
            kind: ReconciliationKind::MissingGrades,
        }))
        .collect();
    out.sort_by(|a, b| a.student_id.cmp(&b.student_id).then(a.kind.cmp(&b.kind)));
    out
}

fn discretize_metrics(m: &EngagementMetrics) -> Result<[Option<i64>; 9]> {
    let mut out = [None; 9];
    for (slot, v) in out.iter_mut().zip(m.values()) {
        *slot = v.map(discretize).transpose()?;
    }
    Ok(out)
}

fn discretize_grades(g: &GradeRecord, mode: GradeBucketing) -> Result<[Option<Value>; 7]> {
    g.validate()?;
    let mut out: [Option<Value>; 7] = Default::default();
    for (slot, &score) in out.iter_mut().zip(&g.scores) {
        *slot = Some(grade_value(score, mode)?);
    }
    Ok(out)
}

/// Joins metrics, levels and grades on student id into discretized
/// 18-field vectors sorted by id. Every student with metrics needs a level.
pub fn assemble_dataset(
    metrics: &BTreeMap<String, EngagementMetrics>,
    levels: &BTreeMap<String, Level>,
    grades: &[GradeRecord],
    opts: AssembleOptions,
) -> Result<Dataset> {
    let mut by_id: BTreeMap<&str, &GradeRecord> = BTreeMap::new();
    for g in grades {
        if by_id.insert(g.student_id.as_str(), g).is_some() {
            return Err(Error::DuplicateStudent(g.student_id.clone()));
        }
    }
    for id in metrics.keys() {
        if !levels.contains_key(id) {
            return Err(Error::MissingLevel(id.clone()));
        }
    }
    let reconciliation = reconcile(metrics.keys().map(String::as_str), by_id.keys().copied());
    let ids: BTreeSet<&str> = metrics
        .keys()
        .map(String::as_str)
        .chain(by_id.keys().copied())
        .collect();
    let mut vectors = Vec::new();
    for id in ids {
        let m = metrics.get(id);
        let g = by_id.get(id);
        if (m.is_none() || g.is_none()) && !opts.keep_partial {
            continue;
        }
        vectors.push(StudentFeatureVector {
            student_id: id.into(),
            metrics: match m {
                Some(m) => discretize_metrics(m)?,
                None => [None; 9],
            },
            level: levels.get(id).copied(),
            grades: match g {
                Some(g) => discretize_grades(g, opts.bucketing)?,
                None => Default::default(),
            },
        });
    }
    Ok(Dataset {
        vectors,
        reconciliation,
    })
}

/// Transaction database of a dataset: one transaction per student, keyed
/// by student id, with absent values omitted.
pub fn encode_transactions(vectors: &[StudentFeatureVector]) -> Result<TransactionDb> {
    TransactionDb::from_records(
        vectors
            .iter()
            .map(|v| (v.student_id.clone(), v.items()))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub level: Level,
    pub students: usize,
    /// Mean raw course grade, `None` when the level is empty.
    pub mean_course_grade: Option<f64>,
}

/// Mean raw (undiscretized) course grade per level over the students of
/// `vectors` that have both a level and grades. Always three rows: L, M, H.
pub fn level_grade_summary(
    vectors: &[StudentFeatureVector],
    grades: &[GradeRecord],
) -> [LevelSummary; 3] {
    let by_id: BTreeMap<&str, &GradeRecord> =
        grades.iter().map(|g| (g.student_id.as_str(), g)).collect();
    let mut sums = [(0usize, 0.0f64); 3];
    for v in vectors {
        if let (Some(level), Some(g)) = (v.level, by_id.get(v.student_id.as_str())) {
            let slot = &mut sums[level as usize];
            slot.0 += 1;
            slot.1 += g.course_grade();
        }
    }
    Level::ALL.map(|level| {
        let (n, sum) = sums[level as usize];
        LevelSummary {
            level,
            students: n,
            mean_course_grade: (n > 0).then(|| sum / n as f64),
        }
    })
}
