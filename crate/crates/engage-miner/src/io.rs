//! File formats: the two input CSVs, the course config, and every
//! intermediate table the pipeline writes.
//!
//! Readers demand the exact header of their schema. Row errors carry the
//! 1-based line number, header included.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use engage_miner_core::engagement::{
    AssignmentSchedule, EngagementMetrics, EventRecord, GradeRecord, Level, ReconciliationEntry,
    StudentFeatureVector, Timestamp, FEATURE_FIELDS, GRADE_FIELDS, METRIC_FIELDS,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EVENT_FIELDS: [&str; 6] = [
    "event_date",
    "event_type",
    "event_location",
    "session_start",
    "session_end",
    "student_id",
];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// ISO-8601 local date-time (`2024-01-10T09:00:00`, fractional seconds
/// allowed, read as UTC) or RFC 3339 with an offset.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f") {
        return Some(Timestamp(t.and_utc().timestamp()));
    }
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|t| Timestamp(t.timestamp()))
}

pub fn format_timestamp(t: Timestamp) -> String {
    DateTime::from_timestamp(t.0, 0)
        .expect("timestamp in chrono range")
        .naive_utc()
        .format(TIMESTAMP_FORMAT)
        .to_string()
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads rows of a headed CSV whose header must equal `fields`, handing
/// each row and its line number to `row`.
fn read_table<R: Read>(
    reader: R,
    origin: &Path,
    fields: &[&str],
    mut row: impl FnMut(&csv::StringRecord, u64) -> Result<()>,
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::row(
            origin,
            1,
            format!("missing header; expected `{}`", fields.join(",")),
        ));
    }
    if header.len() != fields.len() || header.iter().zip(fields).any(|(h, f)| h.trim() != *f) {
        let unknown: Vec<&str> = header
            .iter()
            .filter(|h| !fields.contains(&h.trim()))
            .collect();
        let detail = if unknown.is_empty() {
            String::new()
        } else {
            format!(" (unknown column {})", unknown.join(", "))
        };
        return Err(Error::row(
            origin,
            1,
            format!(
                "header `{}` does not match `{}`{detail}",
                header.iter().collect::<Vec<_>>().join(","),
                fields.join(",")
            ),
        ));
    }
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => return Ok(()),
            Ok(true) => {
                let line = rec.position().map_or(0, |p| p.line());
                if rec.len() != fields.len() {
                    return Err(Error::row(
                        origin,
                        line,
                        format!("expected {} fields, found {}", fields.len(), rec.len()),
                    ));
                }
                row(&rec, line)?;
            }
            Err(e) => return Err(csv_error(origin, e)),
        }
    }
}

fn csv_error(origin: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::row(origin, p.line(), e.to_string()),
        None => Error::format(origin, e.to_string()),
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

fn write_row<I, S>(w: &mut csv::Writer<Vec<u8>>, cells: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(cells)
        .expect("writing to memory cannot fail");
}

fn field_timestamp(origin: &Path, line: u64, name: &str, s: &str) -> Result<Timestamp> {
    parse_timestamp(s)
        .ok_or_else(|| Error::row(origin, line, format!("{name}: unparseable timestamp `{s}`")))
}

fn optional_timestamp(origin: &Path, line: u64, name: &str, s: &str) -> Result<Option<Timestamp>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field_timestamp(origin, line, name, s).map(Some)
    }
}

fn required<'a>(origin: &Path, line: u64, name: &str, s: &'a str) -> Result<&'a str> {
    if s.is_empty() {
        Err(Error::row(origin, line, format!("{name}: missing value")))
    } else {
        Ok(s)
    }
}

/// Parses `events.csv`. Session bounds may be empty; everything else is
/// required.
pub fn parse_event_log<R: Read>(reader: R, origin: &Path) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    read_table(reader, origin, &EVENT_FIELDS, |rec, line| {
        let event = EventRecord {
            event_date: field_timestamp(
                origin,
                line,
                "event_date",
                required(origin, line, "event_date", &rec[0])?,
            )?,
            event_type: required(origin, line, "event_type", &rec[1])?.to_string(),
            event_location: rec[2].to_string(),
            session_start: optional_timestamp(origin, line, "session_start", &rec[3])?,
            session_end: optional_timestamp(origin, line, "session_end", &rec[4])?,
            student_id: required(origin, line, "student_id", &rec[5])?.to_string(),
        };
        event
            .validate()
            .map_err(|e| Error::row(origin, line, e.to_string()))?;
        out.push(event);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_event_log(path: &Path) -> Result<Vec<EventRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_event_log(io::BufReader::new(f), path)
}

pub fn write_event_log(events: &[EventRecord]) -> Vec<u8> {
    let mut w = csv_writer();
    write_row(&mut w, EVENT_FIELDS);
    let opt = |t: Option<Timestamp>| t.map(format_timestamp).unwrap_or_default();
    for e in events {
        write_row(
            &mut w,
            [
                format_timestamp(e.event_date),
                e.event_type.clone(),
                e.event_location.clone(),
                opt(e.session_start),
                opt(e.session_end),
                e.student_id.clone(),
            ],
        );
    }
    finish(w)
}

fn grade_header() -> Vec<&'static str> {
    std::iter::once("student_id").chain(GRADE_FIELDS).collect()
}

/// Parses `grades.csv`; scores must lie in `[0, 100]` and student ids are
/// unique.
pub fn parse_grades<R: Read>(reader: R, origin: &Path) -> Result<Vec<GradeRecord>> {
    let mut out: Vec<GradeRecord> = Vec::new();
    let mut seen: BTreeMap<String, u64> = BTreeMap::new();
    read_table(reader, origin, &grade_header(), |rec, line| {
        let student_id = required(origin, line, "student_id", &rec[0])?.to_string();
        if let Some(first) = seen.insert(student_id.clone(), line) {
            return Err(Error::row(
                origin,
                line,
                format!("duplicate student_id `{student_id}` (first on line {first})"),
            ));
        }
        let mut scores = [0.0; 7];
        for (i, slot) in scores.iter_mut().enumerate() {
            let cell = rec[i + 1].trim();
            *slot = cell.parse::<f64>().map_err(|_| {
                Error::row(
                    origin,
                    line,
                    format!("{}: not a number `{cell}`", GRADE_FIELDS[i]),
                )
            })?;
        }
        let g = GradeRecord { student_id, scores };
        g.validate()
            .map_err(|e| Error::row(origin, line, e.to_string()))?;
        out.push(g);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_grades(path: &Path) -> Result<Vec<GradeRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_grades(io::BufReader::new(f), path)
}

pub fn write_grades(grades: &[GradeRecord]) -> Vec<u8> {
    let mut w = csv_writer();
    write_row(&mut w, grade_header());
    for g in grades {
        write_row(
            &mut w,
            std::iter::once(g.student_id.clone()).chain(g.scores.iter().map(|s| s.to_string())),
        );
    }
    finish(w)
}

fn metric_header() -> Vec<&'static str> {
    std::iter::once("student_id").chain(METRIC_FIELDS).collect()
}

/// Raw (undiscretized) metrics, one row per student; absent durations
/// are empty cells.
pub fn write_metrics(metrics: &BTreeMap<String, EngagementMetrics>) -> Vec<u8> {
    let mut w = csv_writer();
    write_row(&mut w, metric_header());
    for (id, m) in metrics {
        let cells = m
            .values()
            .map(|v| v.map(|v| v.to_string()).unwrap_or_default());
        write_row(&mut w, std::iter::once(id.clone()).chain(cells));
    }
    finish(w)
}

pub fn read_metrics(path: &Path) -> Result<BTreeMap<String, EngagementMetrics>> {
    let bytes = read_file(path)?;
    let mut out = BTreeMap::new();
    read_table(bytes.as_slice(), path, &metric_header(), |rec, line| {
        let mut values = [None; 9];
        for (i, slot) in values.iter_mut().enumerate() {
            let cell = rec[i + 1].trim();
            if cell.is_empty() {
                continue;
            }
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| {
                    Error::row(
                        path,
                        line,
                        format!(
                            "{}: expected a nonnegative number, got `{cell}`",
                            METRIC_FIELDS[i]
                        ),
                    )
                })?;
            *slot = Some(v);
        }
        if out
            .insert(rec[0].to_string(), EngagementMetrics::from_values(values))
            .is_some()
        {
            return Err(Error::row(
                path,
                line,
                format!("duplicate student_id `{}`", &rec[0]),
            ));
        }
        Ok(())
    })?;
    Ok(out)
}

pub const LEVEL_FIELDS: [&str; 2] = ["student_id", "engagement_level"];
pub const TRUTH_FIELDS: [&str; 2] = ["student_id", "true_level"];

pub fn write_levels<'a>(
    fields: [&str; 2],
    levels: impl IntoIterator<Item = (&'a str, Level)>,
) -> Vec<u8> {
    let mut w = csv_writer();
    write_row(&mut w, fields);
    for (id, l) in levels {
        write_row(&mut w, [id, l.as_str()]);
    }
    finish(w)
}

pub fn read_levels(path: &Path, fields: [&str; 2]) -> Result<BTreeMap<String, Level>> {
    let bytes = read_file(path)?;
    let mut out = BTreeMap::new();
    read_table(bytes.as_slice(), path, &fields, |rec, line| {
        let level = Level::parse(&rec[1]).ok_or_else(|| {
            Error::row(path, line, format!("level `{}` is not L, M or H", &rec[1]))
        })?;
        if out.insert(rec[0].to_string(), level).is_some() {
            return Err(Error::row(
                path,
                line,
                format!("duplicate student_id `{}`", &rec[0]),
            ));
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn write_dataset(vectors: &[StudentFeatureVector]) -> Vec<u8> {
    let mut w = csv_writer();
    write_row(&mut w, FEATURE_FIELDS);
    for v in vectors {
        write_row(&mut w, v.cells());
    }
    finish(w)
}

pub fn write_reconciliation(entries: &[ReconciliationEntry]) -> Vec<u8> {
    let mut w = csv_writer();
    write_row(&mut w, ["student_id", "issue"]);
    for e in entries {
        write_row(&mut w, [e.student_id.as_str(), e.kind.as_str()]);
    }
    finish(w)
}

/// The course config: posting times of the three assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseConfig {
    pub assignment1_posted: String,
    pub assignment2_posted: String,
    pub assignment3_posted: String,
}

impl CourseConfig {
    pub fn from_schedule(s: &AssignmentSchedule) -> Self {
        CourseConfig {
            assignment1_posted: format_timestamp(s.posted[0]),
            assignment2_posted: format_timestamp(s.posted[1]),
            assignment3_posted: format_timestamp(s.posted[2]),
        }
    }

    pub fn schedule(&self, origin: &Path) -> Result<AssignmentSchedule> {
        let parse = |name: &str, s: &str| {
            parse_timestamp(s).ok_or_else(|| {
                Error::format(origin, format!("{name}: unparseable timestamp `{s}`"))
            })
        };
        Ok(AssignmentSchedule {
            posted: [
                parse("assignment1_posted", &self.assignment1_posted)?,
                parse("assignment2_posted", &self.assignment2_posted)?,
                parse("assignment3_posted", &self.assignment3_posted)?,
            ],
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat string table serializes")
    }
}

pub fn read_course_config(path: &Path) -> Result<AssignmentSchedule> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: CourseConfig =
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    cfg.schedule(path)
}
