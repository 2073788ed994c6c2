//! Rule reports and their json, csv and text renderings.

use std::fmt::Write as _;

use engage_miner_core::engagement::LevelSummary;
use engage_miner_core::{Algorithm, AssociationRule, ItemUniverse, MiningConfig, RuleMetrics};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

/// The mining configuration as echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub algorithm: String,
    pub min_support: f64,
    pub min_confidence: f64,
    pub min_lift: f64,
    pub max_rule_len: usize,
    pub grade_bucketing: String,
    pub keep_partial: bool,
}

impl ConfigEcho {
    pub fn new(cfg: &MiningConfig, grade_bucketing: &str, keep_partial: bool) -> Self {
        ConfigEcho {
            algorithm: match cfg.algorithm {
                Algorithm::Apriori => "apriori",
                Algorithm::FpGrowth => "fpgrowth",
            }
            .into(),
            min_support: cfg.min_support,
            min_confidence: cfg.min_confidence,
            min_lift: cfg.min_lift,
            max_rule_len: cfg.max_rule_len,
            grade_bucketing: grade_bucketing.into(),
            keep_partial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub records: usize,
    /// SHA-256 of the dataset CSV bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: String,
    pub students: usize,
    /// Mean raw course grade; absent for an empty level.
    pub mean_course_grade: Option<f64>,
}

impl From<&LevelSummary> for LevelRow {
    fn from(s: &LevelSummary) -> Self {
        LevelRow {
            level: s.level.as_str().into(),
            students: s.students,
            mean_course_grade: s.mean_course_grade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
    pub joint_count: usize,
    pub antecedent_count: usize,
    pub consequent_count: usize,
}

impl RuleRow {
    pub fn new(universe: &ItemUniverse, rule: &AssociationRule, m: &RuleMetrics) -> Self {
        RuleRow {
            antecedent: universe.labels(&rule.antecedent),
            consequent: universe.labels(&rule.consequent),
            support: m.support,
            confidence: m.confidence,
            lift: m.lift,
            joint_count: m.joint_count,
            antecedent_count: m.antecedent_count,
            consequent_count: m.consequent_count,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "{} => {}",
            self.antecedent.join(" & "),
            self.consequent.join(" & ")
        )
    }
}

/// Rules sorted by lift descending, with the config that produced them,
/// the per-level grade table, and a fingerprint of the mined dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub config: ConfigEcho,
    pub dataset: Fingerprint,
    pub level_summary: Vec<LevelRow>,
    pub rules: Vec<RuleRow>,
}

pub fn emit_report(report: &RuleReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(["antecedent", "consequent", "support", "confidence", "lift"])
                .expect("in-memory write");
            for r in &report.rules {
                w.write_record([
                    r.antecedent.join(" & "),
                    r.consequent.join(" & "),
                    r.support.to_string(),
                    r.confidence.to_string(),
                    r.lift.to_string(),
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory write")
        }
        Format::Text => text(report).into_bytes(),
    }
}

fn text(report: &RuleReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    writeln!(s, "engagement rule report").unwrap();
    writeln!(
        s,
        "algorithm={} min_support={} min_confidence={} min_lift={} max_rule_len={} grade_bucketing={}",
        c.algorithm, c.min_support, c.min_confidence, c.min_lift, c.max_rule_len, c.grade_bucketing
    )
    .unwrap();
    writeln!(
        s,
        "dataset: {} records, sha256 {}",
        report.dataset.records, report.dataset.sha256
    )
    .unwrap();
    writeln!(s).unwrap();
    for r in &report.rules {
        writeln!(
            s,
            "{}  supp={:.3} conf={:.3} lift={:.3}",
            r.render(),
            r.support,
            r.confidence,
            r.lift
        )
        .unwrap();
    }
    if !report.rules.is_empty() {
        writeln!(s).unwrap();
    }
    writeln!(s, "level  students  mean_course_grade").unwrap();
    for row in &report.level_summary {
        let mean = row
            .mean_course_grade
            .map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
        writeln!(s, "{:<5}  {:>8}  {:>17}", row.level, row.students, mean).unwrap();
    }
    writeln!(s).unwrap();
    let n = report.rules.len();
    writeln!(s, "{n} {}", if n == 1 { "rule" } else { "rules" }).unwrap();
    s
}
