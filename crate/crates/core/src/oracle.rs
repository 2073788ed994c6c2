//! Exhaustive reference miners and random instance generators.
//!
//! These enumerate straight from the definitions (every itemset, every
//! token tuple) and share no code with the miners they check, so use them
//! only on small instances; each one refuses instances past its size guard.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::db::TransactionDb;
use crate::error::{Error, Result};
use crate::gsp::{EventSequence, SequencePattern};
use crate::item::{Item, ItemId, ItemUniverse, Itemset};
use crate::metrics::Support;

/// Largest item universe [`brute_force_frequent_itemsets`] accepts.
pub const MAX_ORACLE_ITEMS: usize = 20;

/// Counts transactions containing `x` by direct subset tests.
pub fn count_containing(x: &Itemset, transactions: &[Itemset]) -> usize {
    transactions.iter().filter(|t| x.is_subset_of(t)).count()
}

fn masks(db: &TransactionDb) -> Vec<u32> {
    db.transactions()
        .iter()
        .map(|t| t.iter().fold(0u32, |m, id| m | 1 << id.0))
        .collect()
}

/// Every itemset (at most one value per attribute) as a bitmask over
/// item ids.
fn all_itemset_masks(universe: &ItemUniverse) -> Vec<u32> {
    let mut by_attr: Vec<Vec<u32>> = Vec::new();
    for i in 0..universe.len() {
        let a = universe.attribute_index(ItemId(i as u32));
        if by_attr.len() <= a {
            by_attr.resize(a + 1, Vec::new());
        }
        by_attr[a].push(i as u32);
    }
    let mut out = alloc::vec![0u32];
    for items in &by_attr {
        let mut next = Vec::with_capacity(out.len() * (items.len() + 1));
        for &m in &out {
            next.push(m);
            for &i in items {
                next.push(m | 1 << i);
            }
        }
        out = next;
    }
    out.retain(|&m| m != 0);
    out
}

fn mask_to_itemset(mask: u32) -> Itemset {
    Itemset::new(
        (0..32)
            .filter(|i| mask & (1 << i) != 0)
            .map(ItemId)
            .collect(),
    )
}

/// All itemsets whose support fraction is at least `min_support`, sorted
/// by size then canonical order.
pub fn brute_force_frequent_itemsets(
    db: &TransactionDb,
    min_support: f64,
) -> Result<Vec<(Itemset, Support)>> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::InvalidThreshold {
            name: "min_support",
            value: min_support,
        });
    }
    if db.universe().len() > MAX_ORACLE_ITEMS {
        return Err(Error::OracleTooLarge("more than 20 items"));
    }
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let m = db.len();
    let rows = masks(db);
    let mut out: Vec<(Itemset, Support)> = all_itemset_masks(db.universe())
        .into_iter()
        .filter_map(|x| {
            let count = rows.iter().filter(|&&t| t & x == x).count();
            (count as f64 / m as f64 >= min_support)
                .then(|| (mask_to_itemset(x), Support::new(count, m)))
        })
        .collect();
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// A rule found by [`brute_force_rules`], with its raw counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub joint: usize,
    pub antecedent_count: usize,
    pub consequent_count: usize,
}

/// Every rule `X ⇒ Y` with `|X ∪ Y| <= max_len` meeting support,
/// confidence and (strict) lift thresholds, by exhaustive enumeration.
/// Sorted by antecedent then consequent.
pub fn brute_force_rules(
    db: &TransactionDb,
    min_support: f64,
    min_confidence: f64,
    min_lift: f64,
    max_len: usize,
) -> Result<Vec<OracleRule>> {
    let frequent = brute_force_frequent_itemsets(db, min_support)?;
    let m = db.len();
    let rows = masks(db);
    let count = |x: u32| rows.iter().filter(|&&t| t & x == x).count();
    let mut out = Vec::new();
    for (set, sup) in frequent
        .iter()
        .filter(|(s, _)| s.len() >= 2 && s.len() <= max_len)
    {
        let full = set.iter().fold(0u32, |acc, id| acc | 1 << id.0);
        // every nonempty proper submask
        let mut x = (full - 1) & full;
        while x != 0 {
            let y = full & !x;
            let (cx, cy) = (count(x), count(y));
            let conf = sup.count as f64 / cx as f64;
            let lift = (sup.count as f64 * m as f64) / (cx as f64 * cy as f64);
            if conf >= min_confidence && lift > min_lift {
                out.push(OracleRule {
                    antecedent: mask_to_itemset(x),
                    consequent: mask_to_itemset(y),
                    joint: sup.count,
                    antecedent_count: cx,
                    consequent_count: cy,
                });
            }
            x = (x - 1) & full;
        }
    }
    out.sort_by(|a, b| {
        a.antecedent
            .cmp(&b.antecedent)
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    Ok(out)
}

/// Order-preserving containment by a plain scan.
pub fn is_subsequence(pattern: &[String], seq: &[String]) -> bool {
    let mut it = seq.iter();
    pattern.iter().all(|p| it.any(|s| s == p))
}

/// Every token tuple of length `1..=max_len` over the observed alphabet
/// whose support reaches `min_support`, sorted by length then tokens.
pub fn brute_force_sequences(
    sequences: &[EventSequence],
    min_support: f64,
    max_len: usize,
) -> Result<Vec<SequencePattern>> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::InvalidThreshold {
            name: "min_support",
            value: min_support,
        });
    }
    let mut alphabet: Vec<&String> = sequences.iter().flat_map(|s| &s.events).collect();
    alphabet.sort();
    alphabet.dedup();
    if alphabet.len() > 6 || max_len > 4 || sequences.len() > 15 {
        return Err(Error::OracleTooLarge(
            "alphabet > 6, max_len > 4 or > 15 sequences",
        ));
    }
    let n = sequences.len();
    let mut out = Vec::new();
    let mut tuples: Vec<Vec<String>> = alloc::vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for t in &tuples {
            for tok in &alphabet {
                let mut p = t.clone();
                p.push((*tok).clone());
                next.push(p);
            }
        }
        for p in &next {
            let count = sequences
                .iter()
                .filter(|s| is_subsequence(p, &s.events))
                .count();
            if count as f64 / n as f64 >= min_support {
                out.push(SequencePattern {
                    elements: p.clone(),
                    support: Support::new(count, n),
                });
            }
        }
        tuples = next;
    }
    Ok(out)
}

/// Random database: up to `max_attrs` attributes with 1..=`max_values`
/// values each (all declared in the universe), up to `max_tx`
/// transactions; each record holds each attribute with a per-database
/// probability.
pub fn random_db<R: Rng>(
    rng: &mut R,
    max_attrs: usize,
    max_values: usize,
    max_tx: usize,
) -> TransactionDb {
    let n_attrs = rng.random_range(1..=max_attrs);
    let domains: Vec<usize> = (0..n_attrs)
        .map(|_| rng.random_range(1..=max_values))
        .collect();
    let universe = ItemUniverse::new(
        domains
            .iter()
            .enumerate()
            .flat_map(|(a, &d)| (0..d).map(move |v| Item::new(format!("a{a}"), (v as i64) * 10))),
    )
    .expect("generated names are nonempty");
    let density: f64 = rng.random_range(0.2..0.95);
    let n_tx = rng.random_range(1..=max_tx);
    let mut ids = Vec::with_capacity(n_tx);
    let mut records = Vec::with_capacity(n_tx);
    for t in 0..n_tx {
        ids.push(format!("t{t}"));
        let mut rec = Vec::new();
        for (a, &d) in domains.iter().enumerate() {
            if rng.random::<f64>() < density {
                rec.push(Item::new(
                    format!("a{a}"),
                    rng.random_range(0..d) as i64 * 10,
                ));
            }
        }
        records.push(rec);
    }
    TransactionDb::with_universe(universe, ids, records).expect("generated records are valid")
}

/// Random event sequences over up to `max_alphabet` tokens (`A`, `B`, ...).
pub fn random_sequences<R: Rng>(
    rng: &mut R,
    max_alphabet: usize,
    max_seqs: usize,
    max_seq_len: usize,
) -> Vec<EventSequence> {
    let alphabet = rng.random_range(1..=max_alphabet);
    let n = rng.random_range(1..=max_seqs);
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=max_seq_len);
            EventSequence {
                student_id: format!("s{i:02}"),
                events: (0..len)
                    .map(|_| String::from(char::from(b'A' + rng.random_range(0..alphabet) as u8)))
                    .collect(),
            }
        })
        .collect()
}
