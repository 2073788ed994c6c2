//! The pipeline stages behind each subcommand. Each stage reads its
//! inputs from disk and writes its outputs into an output directory.
//!
//! | stage     | reads                                   | writes |
//! |-----------|-----------------------------------------|--------|
//! | synth     |                                         | `events.csv`, `grades.csv`, `truth.csv`, `course.toml` |
//! | etl       | events, grades, course config           | `metrics.csv`, `validated_grades.csv`, `reconciliation.csv` |
//! | cluster   | `metrics.csv`                           | `levels.csv`, `clusters.json` |
//! | mine      | `metrics.csv`, `levels.csv`, `validated_grades.csv` | `dataset.csv`, `report.json` |
//! | sequences | events                                  | `sequences.csv` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use engage_miner_core::engagement::{
    assemble_dataset, compute_engagement_metrics, discretize, encode_transactions,
    level_grade_summary, AssembleOptions, EngagementMetrics, EventRecord, GradeBucketing, Level,
    ReconciliationEntry, METRIC_FIELDS,
};
use engage_miner_core::kmeans::{
    kmeans, label_levels, normalize, FeatureMatrix, KMeansParams, LevelScoring,
};
use engage_miner_core::{build_sequences, gsp_mine, mine_rules, MiningConfig, SequencePattern};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;
use crate::report::{ConfigEcho, Fingerprint, LevelRow, RuleReport, RuleRow};
use crate::synth::{generate_cohort, CohortSpec};

pub const EVENTS: &str = "events.csv";
pub const GRADES: &str = "grades.csv";
pub const TRUTH: &str = "truth.csv";
pub const COURSE: &str = "course.toml";
pub const METRICS: &str = "metrics.csv";
pub const VALIDATED_GRADES: &str = "validated_grades.csv";
pub const RECONCILIATION: &str = "reconciliation.csv";
pub const LEVELS: &str = "levels.csv";
pub const CLUSTERS: &str = "clusters.json";
pub const DATASET: &str = "dataset.csv";
pub const REPORT: &str = "report.json";
pub const SEQUENCES: &str = "sequences.csv";

/// Upper ends of the documented metric ranges. Values above them are
/// reported, not rejected.
pub const METRIC_SOFT_MAX: [i64; 9] = [650, 1010, 60, 10, 10, 580, 300, 630, 500];

fn require(path: &Path, producer: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingInput {
            path: path.to_path_buf(),
            producer,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSummary {
    pub students: usize,
    pub events: usize,
}

pub fn synth(spec: &CohortSpec, out_dir: &Path) -> Result<SynthSummary> {
    let cohort = generate_cohort(spec)?;
    io::write_file(&out_dir.join(EVENTS), &cohort.events_csv())?;
    io::write_file(&out_dir.join(GRADES), &cohort.grades_csv())?;
    io::write_file(&out_dir.join(TRUTH), &cohort.truth_csv())?;
    io::write_file(&out_dir.join(COURSE), cohort.course_toml().as_bytes())?;
    Ok(SynthSummary {
        students: cohort.truth.len(),
        events: cohort.events.len(),
    })
}

#[derive(Debug, Clone)]
pub struct EtlInputs {
    pub events: PathBuf,
    pub grades: PathBuf,
    pub course_config: PathBuf,
}

impl EtlInputs {
    /// The files `synth` writes into `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        EtlInputs {
            events: dir.join(EVENTS),
            grades: dir.join(GRADES),
            course_config: dir.join(COURSE),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtlSummary {
    pub events: usize,
    pub students: usize,
    pub reconciliation: Vec<ReconciliationEntry>,
    /// Discretized values above [`METRIC_SOFT_MAX`].
    pub warnings: Vec<String>,
}

/// Raw metrics per student, computed in parallel over students.
pub fn metrics_by_student(
    events: &[EventRecord],
    schedule: &engage_miner_core::engagement::AssignmentSchedule,
) -> BTreeMap<String, EngagementMetrics> {
    let mut groups: BTreeMap<&str, Vec<EventRecord>> = BTreeMap::new();
    for e in events {
        groups.entry(&e.student_id).or_default().push(e.clone());
    }
    let groups: Vec<(&str, Vec<EventRecord>)> = groups.into_iter().collect();
    groups
        .par_iter()
        .map(|(id, evs)| (id.to_string(), compute_engagement_metrics(evs, schedule)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn etl(inputs: &EtlInputs, out_dir: &Path) -> Result<EtlSummary> {
    require(&inputs.events, "synth")?;
    require(&inputs.grades, "synth")?;
    require(&inputs.course_config, "synth")?;
    let events = io::read_event_log(&inputs.events)?;
    let mut grades = io::read_grades(&inputs.grades)?;
    let schedule = io::read_course_config(&inputs.course_config)?;
    let metrics = metrics_by_student(&events, &schedule);
    grades.sort_by(|a, b| a.student_id.cmp(&b.student_id));

    let mut warnings = Vec::new();
    for (id, m) in &metrics {
        for ((v, max), name) in m.values().iter().zip(METRIC_SOFT_MAX).zip(METRIC_FIELDS) {
            if let Some(v) = v {
                let d = discretize(*v)?;
                if d > max {
                    warnings.push(format!(
                        "{id}: {name} = {d} above documented range [0, {max}]"
                    ));
                }
            }
        }
    }
    let reconciliation = engage_miner_core::engagement::reconcile(
        metrics.keys().map(String::as_str),
        grades.iter().map(|g| g.student_id.as_str()),
    );
    io::write_file(&out_dir.join(METRICS), &io::write_metrics(&metrics))?;
    io::write_file(&out_dir.join(VALIDATED_GRADES), &io::write_grades(&grades))?;
    io::write_file(
        &out_dir.join(RECONCILIATION),
        &io::write_reconciliation(&reconciliation),
    )?;
    Ok(EtlSummary {
        events: events.len(),
        students: metrics.len(),
        reconciliation,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterInfo {
    pub level: String,
    pub size: usize,
    /// Centroid in min-max scaled units.
    pub centroid: Vec<f64>,
    /// Centroid mapped back to raw metric units.
    pub centroid_raw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub seed: u64,
    pub k: usize,
    pub features: Vec<String>,
    pub iterations: usize,
    pub inertia: f64,
    pub inertia_history: Vec<f64>,
    /// Per-feature `(min, max)` used for scaling.
    pub scaling: Vec<(f64, f64)>,
    /// Clusters in L, M, H order.
    pub clusters: Vec<ClusterInfo>,
}

/// Students' levels from k-means (k = 3) over min-max scaled raw metrics.
pub fn cluster_levels(
    metrics: &BTreeMap<String, EngagementMetrics>,
    seed: u64,
) -> Result<(BTreeMap<String, Level>, ClusterSummary)> {
    let raw = FeatureMatrix::from_metrics(metrics)?;
    let scaled = normalize(&raw);
    let result = kmeans(
        &scaled,
        KMeansParams {
            seed,
            ..KMeansParams::default()
        },
    )?;
    let levels = label_levels(
        &result.centroids,
        &result.assignments,
        &LevelScoring::engagement(),
    )?;
    let scaling = scaled.scaling().unwrap_or_default().to_vec();
    let mut level_of = vec![None; result.centroids.len()];
    for (&c, &l) in result.assignments.iter().zip(&levels) {
        level_of[c] = Some(l);
    }
    let mut clusters: Vec<ClusterInfo> = Vec::new();
    for level in Level::ALL {
        let Some(c) = level_of.iter().position(|&l| l == Some(level)) else {
            continue;
        };
        let centroid = result.centroids[c].clone();
        let centroid_raw = centroid
            .iter()
            .zip(&scaling)
            .map(|(v, (lo, hi))| lo + v * (hi - lo))
            .collect();
        clusters.push(ClusterInfo {
            level: level.as_str().into(),
            size: result.assignments.iter().filter(|&&a| a == c).count(),
            centroid,
            centroid_raw,
        });
    }
    let summary = ClusterSummary {
        seed,
        k: result.centroids.len(),
        features: METRIC_FIELDS.iter().map(|s| s.to_string()).collect(),
        iterations: result.iterations,
        inertia: result.inertia,
        inertia_history: result.inertia_history,
        scaling,
        clusters,
    };
    let by_id = scaled.row_ids().iter().cloned().zip(levels).collect();
    Ok((by_id, summary))
}

pub fn cluster(out_dir: &Path, seed: u64) -> Result<ClusterSummary> {
    let metrics_path = out_dir.join(METRICS);
    require(&metrics_path, "etl")?;
    let metrics = io::read_metrics(&metrics_path)?;
    let (levels, summary) = cluster_levels(&metrics, seed)?;
    io::write_file(
        &out_dir.join(LEVELS),
        &io::write_levels(
            io::LEVEL_FIELDS,
            levels.iter().map(|(id, l)| (id.as_str(), *l)),
        ),
    )?;
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    io::write_file(&out_dir.join(CLUSTERS), &json)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MineOptions {
    pub config: MiningConfig,
    pub bucketing: GradeBucketing,
    pub keep_partial: bool,
}

pub fn bucketing_name(b: GradeBucketing) -> &'static str {
    match b {
        GradeBucketing::Exact10s => "exact-10s",
        GradeBucketing::Banded => "banded",
    }
}

/// Assembles the 18-field dataset, mines it and writes `dataset.csv`
/// and `report.json`.
pub fn mine(out_dir: &Path, opts: &MineOptions) -> Result<RuleReport> {
    opts.config.validate()?;
    let metrics_path = out_dir.join(METRICS);
    let grades_path = out_dir.join(VALIDATED_GRADES);
    let levels_path = out_dir.join(LEVELS);
    require(&metrics_path, "etl")?;
    require(&grades_path, "etl")?;
    require(&levels_path, "cluster")?;
    let metrics = io::read_metrics(&metrics_path)?;
    let grades = io::read_grades(&grades_path)?;
    let levels = io::read_levels(&levels_path, io::LEVEL_FIELDS)?;

    let dataset = assemble_dataset(
        &metrics,
        &levels,
        &grades,
        AssembleOptions {
            bucketing: opts.bucketing,
            keep_partial: opts.keep_partial,
        },
    )?;
    let csv = io::write_dataset(&dataset.vectors);
    io::write_file(&out_dir.join(DATASET), &csv)?;
    let fingerprint = Fingerprint {
        records: dataset.vectors.len(),
        sha256: hex::encode(Sha256::digest(&csv)),
    };

    let db = encode_transactions(&dataset.vectors)?;
    let rules = mine_rules(&db, &opts.config)?;
    let report = RuleReport {
        config: ConfigEcho::new(
            &opts.config,
            bucketing_name(opts.bucketing),
            opts.keep_partial,
        ),
        dataset: fingerprint,
        level_summary: level_grade_summary(&dataset.vectors, &grades)
            .iter()
            .map(LevelRow::from)
            .collect(),
        rules: rules
            .iter()
            .map(|(r, m)| RuleRow::new(db.universe(), r, m))
            .collect(),
    };
    io::write_file(
        &out_dir.join(REPORT),
        &crate::report::emit_report(&report, crate::report::Format::Json),
    )?;
    Ok(report)
}

pub fn load_report(path: &Path) -> Result<RuleReport> {
    require(path, "mine")?;
    let bytes = io::read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

/// Mines frequent event sequences per student (GSP) and writes
/// `sequences.csv`.
pub fn sequences(
    events_path: &Path,
    out_dir: &Path,
    min_support: f64,
    max_len: usize,
) -> Result<Vec<SequencePattern>> {
    require(events_path, "synth")?;
    let events = io::read_event_log(events_path)?;
    let seqs = build_sequences(&events);
    let patterns = gsp_mine(&seqs, min_support, max_len)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["pattern", "length", "count", "support"])
        .expect("in-memory write");
    for p in &patterns {
        w.write_record([
            p.elements.join(" -> "),
            p.elements.len().to_string(),
            p.support.count.to_string(),
            p.support.fraction().to_string(),
        ])
        .expect("in-memory write");
    }
    io::write_file(
        &out_dir.join(SEQUENCES),
        &w.into_inner().expect("in-memory write"),
    )?;
    Ok(patterns)
}
