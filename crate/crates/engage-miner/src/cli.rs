use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use engage_miner_core::engagement::GradeBucketing;
use engage_miner_core::gsp::DEFAULT_MAX_LEN;
use engage_miner_core::{Algorithm, MiningConfig};

use crate::error::{Error, Result};
use crate::pipeline::{self, EtlInputs, MineOptions};
use crate::report::{emit_report, Format};
use crate::synth::CohortSpec;

pub const THREADS_ENV: &str = "ENGAGE_MINER_THREADS";

/// Mine association rules linking LMS engagement to course grades.
#[derive(Debug, Parser)]
#[command(name = "engage-miner", version)]
pub struct Cli {
    /// Directory holding every input and output of the pipeline.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort: events.csv, grades.csv, truth.csv, course.toml.
    Synth(SynthArgs),
    /// Compute raw engagement metrics and reconcile students.
    Etl(EtlArgs),
    /// Assign L/M/H engagement levels by k-means.
    Cluster(ClusterArgs),
    /// Build the 18-feature dataset and mine engagement/grade rules.
    Mine(MineArgs),
    /// Re-render a saved report.json.
    Report(ReportArgs),
    /// Mine frequent event sequences from the raw log (GSP; an extension
    /// beyond the flat student table).
    Sequences(SequencesArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Probability that a student's grades follow their engagement level.
    #[arg(long, default_value_t = 1.0)]
    pub implication_strength: f64,
}

#[derive(Debug, Args)]
pub struct EtlArgs {
    /// Event log [default: <out-dir>/events.csv]
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Grade table [default: <out-dir>/grades.csv]
    #[arg(long)]
    pub grades: Option<PathBuf>,
    /// Assignment posting times [default: <out-dir>/course.toml]
    #[arg(long)]
    pub course_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Apriori,
    Fpgrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BucketingArg {
    #[value(name = "exact-10s")]
    Exact10s,
    Banded,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long, default_value_t = 0.1)]
    pub min_support: f64,
    #[arg(long, default_value_t = 0.9)]
    pub min_confidence: f64,
    /// Rules must have lift strictly above this.
    #[arg(long, default_value_t = 1.0)]
    pub min_lift: f64,
    #[arg(long, value_enum, default_value = "apriori")]
    pub algorithm: AlgorithmArg,
    /// Largest number of items in a rule.
    #[arg(long, default_value_t = 4)]
    pub max_rule_len: usize,
    #[arg(long, value_enum, default_value = "banded")]
    pub grade_bucketing: BucketingArg,
    /// Keep students present in only one of events and grades.
    #[arg(long)]
    pub keep_partial: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Saved report [default: <out-dir>/report.json]
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SequencesArgs {
    /// Event log [default: <out-dir>/events.csv]
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub min_support: f64,
    /// Longest pattern, in events.
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

/// Sizes the global worker pool from [`THREADS_ENV`] when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    // a pool built earlier in this process keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn write_stdout(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>".as_ref(), e))
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Synth(a) => {
            let spec = CohortSpec {
                n_students: a.n,
                seed: a.seed,
                implication_strength: a.implication_strength,
                ..CohortSpec::default()
            };
            let s = pipeline::synth(&spec, out)?;
            eprintln!(
                "synth: {} students, {} events -> {}",
                s.students,
                s.events,
                out.display()
            );
        }
        Command::Etl(a) => {
            let defaults = EtlInputs::in_dir(out);
            let inputs = EtlInputs {
                events: a.events.unwrap_or(defaults.events),
                grades: a.grades.unwrap_or(defaults.grades),
                course_config: a.course_config.unwrap_or(defaults.course_config),
            };
            let s = pipeline::etl(&inputs, out)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "etl: {} events, {} students, {} reconciliation entries -> {}",
                s.events,
                s.students,
                s.reconciliation.len(),
                out.display()
            );
        }
        Command::Cluster(a) => {
            let s = pipeline::cluster(out, a.seed)?;
            let sizes: Vec<String> = s
                .clusters
                .iter()
                .map(|c| format!("{}={}", c.level, c.size))
                .collect();
            eprintln!(
                "cluster: {} after {} iterations, inertia {:.4}",
                sizes.join(" "),
                s.iterations,
                s.inertia
            );
        }
        Command::Mine(a) => {
            let opts = MineOptions {
                config: MiningConfig {
                    min_support: a.min_support,
                    min_confidence: a.min_confidence,
                    min_lift: a.min_lift,
                    algorithm: match a.algorithm {
                        AlgorithmArg::Apriori => Algorithm::Apriori,
                        AlgorithmArg::Fpgrowth => Algorithm::FpGrowth,
                    },
                    max_rule_len: a.max_rule_len,
                },
                bucketing: match a.grade_bucketing {
                    BucketingArg::Exact10s => GradeBucketing::Exact10s,
                    BucketingArg::Banded => GradeBucketing::Banded,
                },
                keep_partial: a.keep_partial,
            };
            opts.config
                .validate()
                .map_err(|e| Error::Usage(e.to_string()))?;
            let report = pipeline::mine(out, &opts)?;
            write_stdout(&emit_report(&report, a.format))?;
        }
        Command::Report(a) => {
            let path = a.input.unwrap_or_else(|| out.join(pipeline::REPORT));
            let report = pipeline::load_report(&path)?;
            write_stdout(&emit_report(&report, a.format))?;
        }
        Command::Sequences(a) => {
            let events = a.events.unwrap_or_else(|| out.join(pipeline::EVENTS));
            let pats = pipeline::sequences(&events, out, a.min_support, a.max_len)?;
            eprintln!(
                "sequences: {} frequent patterns -> {}",
                pats.len(),
                out.join(pipeline::SEQUENCES).display()
            );
        }
    }
    Ok(())
}
