//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use engage_miner::io;
use engage_miner::pipeline::{self, EtlInputs, MineOptions};
use engage_miner::report::RuleReport;
use engage_miner::synth::CohortSpec;
use engage_miner_core::apriori::frequent_itemsets;
use engage_miner_core::engagement::{GradeBucketing, Level, GRADE_ATTRIBUTES, METRIC_FIELDS};
use engage_miner_core::kmeans::{
    kmeans, label_levels, normalize, FeatureMatrix, KMeansParams, LevelScoring,
};
use engage_miner_core::metrics::evaluate;
use engage_miner_core::oracle::{
    brute_force_frequent_itemsets, brute_force_rules, brute_force_sequences, random_db,
    random_sequences,
};
use engage_miner_core::{
    confidence, gsp_mine, mine_rules, support, Algorithm, AssociationRule, Error as CoreError,
    ItemId, Itemset, MiningConfig, TransactionDb,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(elapsed < Duration::from_secs(limit_s), || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn contains(t: &Itemset, x: &Itemset) -> bool {
    x.iter().all(|id| t.items().binary_search(&id).is_ok())
}

fn count(db: &TransactionDb, x: &Itemset) -> usize {
    db.transactions().iter().filter(|t| contains(t, x)).count()
}

/// A random disjoint `(X, Y)` with one value per attribute, mostly drawn
/// from one transaction so counts are usually nonzero.
fn random_rule(rng: &mut ChaCha8Rng, db: &TransactionDb) -> Option<(Itemset, Itemset)> {
    let u = db.universe();
    let mut pool: Vec<ItemId> = if rng.random_bool(0.7) {
        db.transactions()[rng.random_range(0..db.len())]
            .iter()
            .collect()
    } else {
        let mut ids: Vec<ItemId> = (0..u.len() as u32).map(ItemId).collect();
        ids.shuffle(rng);
        let mut used = BTreeSet::new();
        ids.retain(|&id| used.insert(u.attribute_index(id)));
        ids
    };
    pool.shuffle(rng);
    if pool.len() < 2 {
        return None;
    }
    let k = rng.random_range(2..=pool.len().min(5));
    let cut = rng.random_range(1..k);
    Some((
        pool[..cut].iter().copied().collect(),
        pool[cut..k].iter().copied().collect(),
    ))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut rules, mut zero) = (0, 0);
    for _ in 0..500 {
        let db = random_db(&mut rng, 8, 3, 30);
        let m = db.len();
        for _ in 0..10 {
            let Some((x, y)) = random_rule(&mut rng, &db) else {
                continue;
            };
            let xy = x.union(&y);
            let (cx, cy, cxy) = (count(&db, &x), count(&db, &y), count(&db, &xy));
            check(db.support_count(&xy).unwrap() == cxy, || {
                format!("support count of {xy:?}")
            })?;
            check(support(&x, &db).unwrap() == cx as f64 / m as f64, || {
                "support fraction".into()
            })?;
            let rule = AssociationRule::new(x, y).unwrap();
            match evaluate(&rule, &db) {
                Ok(got) => {
                    check(cx > 0, || {
                        "metrics reported for zero-support antecedent".into()
                    })?;
                    check(
                        (
                            got.joint_count,
                            got.antecedent_count,
                            got.consequent_count,
                            got.total,
                        ) == (cxy, cx, cy, m),
                        || format!("counts {got:?} vs ({cxy}, {cx}, {cy}, {m})"),
                    )?;
                    check(got.confidence == cxy as f64 / cx as f64, || {
                        "confidence".into()
                    })?;
                    let by_fractions =
                        (cxy as f64 / m as f64) / ((cx as f64 / m as f64) * (cy as f64 / m as f64));
                    check(
                        (got.lift - by_fractions).abs() <= 1e-12 * by_fractions.max(1e-300),
                        || format!("lift {} vs {by_fractions}", got.lift),
                    )?;
                    rules += 1;
                }
                Err(CoreError::ZeroMarginalSupport) => {
                    check(cx == 0 || cy == 0, || "spurious zero-marginal error".into())?;
                    match confidence(&rule, &db) {
                        Ok(c) => check(cx > 0 && c == cxy as f64 / cx as f64, || {
                            "confidence with absent consequent".into()
                        })?,
                        Err(CoreError::ZeroAntecedentSupport) => {
                            check(cx == 0, || "spurious zero-antecedent error".into())?
                        }
                        Err(e) => return Err(e.to_string()),
                    }
                    zero += 1;
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    within(start.elapsed(), 10)?;
    Ok(format!(
        "500 dbs, {rules} rules exact, {zero} zero-support errors as specified, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn as_counts<'a>(it: impl Iterator<Item = (&'a Itemset, usize)>) -> BTreeSet<(Itemset, usize)> {
    it.map(|(s, c)| (s.clone(), c)).collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut patterns = 0;
    for i in 0..200 {
        let db = random_db(&mut rng, 6, 3, 30);
        let s = rng.random_range(0.05..=0.6);
        let oracle: BTreeSet<(Itemset, usize)> = brute_force_frequent_itemsets(&db, s)
            .unwrap()
            .into_iter()
            .map(|(set, sup)| (set, sup.count))
            .collect();
        for algorithm in [Algorithm::Apriori, Algorithm::FpGrowth] {
            let cfg = MiningConfig {
                min_support: s,
                algorithm,
                max_rule_len: usize::MAX,
                ..MiningConfig::default()
            };
            let table = frequent_itemsets(&db, &cfg).unwrap();
            let got = as_counts(table.iter().map(|(set, sup)| (set, sup.count)));
            check(got == oracle, || {
                format!(
                    "instance {i}, {algorithm:?}, s={s}: {} vs oracle {}",
                    got.len(),
                    oracle.len()
                )
            })?;
        }
        patterns += oracle.len();
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "200 instances, {patterns} frequent itemsets, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0;
    for i in 0..300 {
        let db = random_db(&mut rng, 6, 3, 30);
        let min_lift = [1.0, 0.0, 1.2][i % 3];
        let max_len = rng.random_range(2..=6);
        let cfg = MiningConfig {
            min_support: 0.1,
            min_confidence: 0.9,
            min_lift,
            max_rule_len: max_len,
            ..MiningConfig::default()
        };
        let oracle: BTreeSet<(Itemset, Itemset)> =
            brute_force_rules(&db, 0.1, 0.9, min_lift, max_len)
                .unwrap()
                .into_iter()
                .map(|r| (r.antecedent, r.consequent))
                .collect();
        for algorithm in [Algorithm::Apriori, Algorithm::FpGrowth] {
            let rules = mine_rules(&db, &MiningConfig { algorithm, ..cfg }).unwrap();
            let m = db.len();
            for (r, got) in &rules {
                let (cx, cy, cxy) = (
                    count(&db, &r.antecedent),
                    count(&db, &r.consequent),
                    count(&db, &r.items()),
                );
                let sound = cxy as f64 / m as f64 >= 0.1
                    && cxy as f64 / cx as f64 >= 0.9
                    && (cxy * m) as f64 / (cx * cy) as f64 > min_lift
                    && got.joint_count == cxy;
                check(sound, || {
                    format!("instance {i}: unsound rule {r:?} {got:?}")
                })?;
            }
            let mined: BTreeSet<(Itemset, Itemset)> = rules
                .into_iter()
                .map(|(r, _)| (r.antecedent, r.consequent))
                .collect();
            let missing = oracle.difference(&mined).count();
            let extra = mined.difference(&oracle).count();
            check(missing == 0 && extra == 0, || {
                format!("instance {i}, {algorithm:?}: {missing} rules missing, {extra} extra")
            })?;
        }
        total += oracle.len();
    }
    Ok(format!(
        "300 instances, {total} qualifying rules, none missing or unsound, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut patterns = 0;
    for i in 0..200 {
        let seqs = random_sequences(&mut rng, 6, 15, 8);
        let s = rng.random_range(0.05..=0.8);
        let max_len = rng.random_range(1..=4);
        let got = gsp_mine(&seqs, s, max_len).unwrap();
        let want = brute_force_sequences(&seqs, s, max_len).unwrap();
        check(got == want, || {
            format!(
                "instance {i}: {} patterns vs oracle {}",
                got.len(),
                want.len()
            )
        })?;
        patterns += want.len();
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "200 instances, {patterns} sequential patterns, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn run_stages(dir: &Path, bucketing: GradeBucketing) -> Result<(), String> {
    let e = |e: engage_miner::Error| e.to_string();
    pipeline::etl(&EtlInputs::in_dir(dir), dir).map_err(e)?;
    pipeline::cluster(dir, 0).map_err(e)?;
    let opts = MineOptions {
        bucketing,
        ..MineOptions::default()
    };
    pipeline::mine(dir, &opts).map_err(e)?;
    Ok(())
}

fn criterion_5() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let spec = CohortSpec {
        n_students: 150,
        seed: 5,
        ..CohortSpec::default()
    };
    for dir in [&a, &b] {
        pipeline::synth(&spec, dir).map_err(|e| e.to_string())?;
        run_stages(dir, GradeBucketing::Exact10s)?;
    }
    for f in [
        pipeline::METRICS,
        pipeline::VALIDATED_GRADES,
        pipeline::RECONCILIATION,
        pipeline::LEVELS,
        pipeline::DATASET,
        pipeline::REPORT,
    ] {
        let (x, y) = (
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
        );
        check(x == y, || format!("{f} differs between identical runs"))?;
    }
    check(
        std::fs::read_to_string(a.join(pipeline::RECONCILIATION)).unwrap() == "student_id,issue\n",
        || "generated cohort produced reconciliation entries".into(),
    )?;

    let metrics = io::read_metrics(&a.join(pipeline::METRICS)).unwrap();
    let grades: BTreeMap<String, [f64; 7]> = io::read_grades(&a.join(pipeline::VALIDATED_GRADES))
        .unwrap()
        .into_iter()
        .map(|g| (g.student_id, g.scores))
        .collect();
    let dataset = std::fs::read_to_string(a.join(pipeline::DATASET)).unwrap();
    let mut rdr = csv::Reader::from_reader(dataset.as_bytes());
    check(rdr.headers().unwrap().len() == 18, || {
        "header is not 18 fields".into()
    })?;
    let (mut rows, mut cells) = (0, 0);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        check(rec.len() == 18, || format!("row with {} fields", rec.len()))?;
        let id = &rec[0];
        let raw: Vec<Option<f64>> = metrics[id]
            .values()
            .into_iter()
            .chain(grades[id].iter().map(|&g| Some(g)))
            .collect();
        let rounded = (1..10).chain(11..18).map(|i| &rec[i]);
        for ((cell, raw), name) in rounded
            .zip(raw)
            .zip(METRIC_FIELDS.iter().chain(GRADE_ATTRIBUTES.iter()))
        {
            let Some(raw) = raw else {
                check(cell.is_empty(), || {
                    format!("{id} {name}: absent value printed")
                })?;
                continue;
            };
            let v: i64 = cell
                .parse()
                .map_err(|_| format!("{id} {name}: `{cell}` not an integer"))?;
            check(v % 10 == 0 && (raw - v as f64).abs() <= 5.0, || {
                format!("{id} {name}: {raw} -> {v}")
            })?;
            cells += 1;
        }
        rows += 1;
    }
    check(rows == 150, || format!("{rows} rows"))?;
    Ok(format!(
        "byte-identical reruns, {rows} vectors of 18 fields, {cells} values multiples of 10 within 5"
    ))
}

fn criterion_6() -> Outcome {
    let mut runs = 0;
    let mut iterations = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let centers = [0.1, 0.5, 0.9];
        let mut rows = Vec::new();
        let mut planted = Vec::new();
        for i in 0..150 {
            let blob = (i * 7 + seed as usize) % 3;
            rows.push(
                (0..9)
                    .map(|_| centers[blob] + noise.sample(&mut rng))
                    .collect::<Vec<f64>>(),
            );
            planted.push(Level::ALL[blob]);
        }
        let ids = (0..rows.len()).map(|i| format!("p{i:03}")).collect();
        let m = FeatureMatrix::new(ids, rows).map_err(|e| e.to_string())?;
        for matrix in [m.clone(), normalize(&m)] {
            let result = kmeans(
                &matrix,
                KMeansParams {
                    seed,
                    ..KMeansParams::default()
                },
            )
            .map_err(|e| e.to_string())?;
            check(
                result.inertia_history.windows(2).all(|w| w[1] <= w[0]),
                || format!("seed {seed}: inertia rose {:?}", result.inertia_history),
            )?;
            let levels = label_levels(
                &result.centroids,
                &result.assignments,
                &LevelScoring::engagement(),
            )
            .map_err(|e| e.to_string())?;
            let wrong = levels.iter().zip(&planted).filter(|(a, b)| a != b).count();
            check(wrong == 0, || {
                format!("seed {seed}: {wrong} of 150 mislabelled")
            })?;
            iterations += result.iterations;
            runs += 1;
        }
    }

    // the synthetic cohort's own levels, through the real feature path
    let spec = CohortSpec {
        n_students: 300,
        seed: 6,
        ..CohortSpec::default()
    };
    let cohort = engage_miner::synth::generate_cohort(&spec).unwrap();
    let metrics = pipeline::metrics_by_student(&cohort.events, &cohort.schedule);
    let (levels, _) = pipeline::cluster_levels(&metrics, 0).map_err(|e| e.to_string())?;
    let truth: BTreeMap<String, Level> = cohort.truth.into_iter().collect();
    check(levels == truth, || {
        "synthetic cohort levels not recovered".into()
    })?;
    Ok(format!(
        "{runs} planted 3-blob runs (40 sd apart) 100% recovered in L/M/H order, {iterations} Lloyd iterations all non-increasing; 300-student cohort recovered"
    ))
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_engage-miner"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn cli_pipeline(dir: &Path, seed: u64, strength: &str) -> Result<RuleReport, String> {
    cli(
        dir,
        &[
            "synth",
            "--n",
            "500",
            "--seed",
            &seed.to_string(),
            "--implication-strength",
            strength,
        ],
    )?;
    cli(dir, &["etl"])?;
    cli(dir, &["cluster"])?;
    cli(dir, &["mine", "--format", "csv"])?;
    pipeline::load_report(&dir.join(pipeline::REPORT)).map_err(|e| e.to_string())
}

fn is_grade(item: &str) -> bool {
    GRADE_ATTRIBUTES.contains(&item.split('=').next().unwrap_or(""))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = cli_pipeline(&tmp.path().join("planted"), 7, "1")?;
    let planted = report
        .rules
        .iter()
        .find(|r| {
            r.antecedent == ["EngagementLevel=H", "Quiz1=90+"]
                && r.consequent == ["CourseGrade=90+"]
        })
        .ok_or("planted rule EngagementLevel=H & Quiz1=90+ => CourseGrade=90+ not found")?;
    check(planted.confidence == 1.0 && planted.lift > 1.0, || {
        format!(
            "planted rule conf={} lift={}",
            planted.confidence, planted.lift
        )
    })?;
    let means: Vec<f64> = report
        .level_summary
        .iter()
        .map(|r| r.mean_course_grade.unwrap_or(f64::NAN))
        .collect();
    check(
        report
            .level_summary
            .iter()
            .map(|r| r.level.as_str())
            .eq(["L", "M", "H"]),
        || "level rows".into(),
    )?;
    check(means[0] < means[1] && means[1] <= means[2], || {
        format!("level means {means:?}")
    })?;

    let mut clean = 0;
    for seed in 0..20 {
        let r = cli_pipeline(
            &tmp.path().join(format!("independent{seed}")),
            100 + seed,
            "0",
        )?;
        let spurious = r
            .rules
            .iter()
            .filter(|x| x.lift > 1.1)
            .filter(|x| {
                x.antecedent.iter().all(|i| !is_grade(i))
                    && x.consequent.iter().all(|i| is_grade(i))
            })
            .count();
        if spurious == 0 {
            clean += 1;
        }
    }
    check(clean >= 19, || {
        format!("only {clean}/20 independent runs free of engagement->grade rules")
    })?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "planted rule supp={:.3} conf={:.3} lift={:.3}; means L={:.2} M={:.2} H={:.2}; {clean}/20 independent runs clean; {:.2} s",
        planted.support,
        planted.confidence,
        planted.lift,
        means[0],
        means[1],
        means[2],
        start.elapsed().as_secs_f64()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("metric exactness", criterion_1),
        ("miner/oracle equivalence", criterion_2),
        ("rule soundness and completeness", criterion_3),
        ("GSP/oracle equivalence", criterion_4),
        ("ETL determinism and discretization", criterion_5),
        ("clustering recovery", criterion_6),
        ("planted engagement->grade rule", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
