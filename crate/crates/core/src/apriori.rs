//! Level-wise (Apriori) frequent itemset mining and rule generation.
//!
//! Level `k` candidates are built by joining frequent `(k-1)`-itemsets that
//! share their first `k-2` items, pruned by the full subset test, and then
//! counted in one pass over the database. Mining stops at the first empty
//! level (or at the length bound).

use alloc::vec::Vec;

use crate::db::TransactionDb;
use crate::error::{Error, Result};
use crate::fpgrowth;
use crate::item::{ItemUniverse, Itemset};
use crate::metrics::{
    check_fraction, expand_rules, min_support_count, AssociationRule, RuleMetrics, Support,
};

/// Frequent itemsets grouped by size, each level in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemsetTable {
    levels: Vec<Vec<(Itemset, usize)>>,
    min_support: f64,
    min_count: usize,
    total: usize,
}

impl FrequentItemsetTable {
    /// Groups `(itemset, count)` pairs by size. Input order does not matter.
    pub fn from_counts(
        mut patterns: Vec<(Itemset, usize)>,
        min_support: f64,
        total: usize,
    ) -> Result<Self> {
        let min_count = min_support_count(min_support, total)?;
        patterns.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        let mut levels: Vec<Vec<(Itemset, usize)>> = Vec::new();
        for (set, count) in patterns {
            if set.is_empty() {
                continue;
            }
            while levels.len() < set.len() {
                levels.push(Vec::new());
            }
            levels[set.len() - 1].push((set, count));
        }
        while levels.last().is_some_and(|l| l.is_empty()) {
            levels.pop();
        }
        Ok(FrequentItemsetTable {
            levels,
            min_support,
            min_count,
            total,
        })
    }

    pub fn min_support(&self) -> f64 {
        self.min_support
    }

    /// The integer threshold `C`: smallest count whose fraction reaches
    /// `min_support`.
    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Largest itemset size present.
    pub fn max_len(&self) -> usize {
        self.levels.len()
    }

    /// Itemsets of size `k` (1-based) with their counts.
    pub fn level(&self, k: usize) -> &[(Itemset, usize)] {
        if k == 0 || k > self.levels.len() {
            &[]
        } else {
            &self.levels[k - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Itemset, Support)> + '_ {
        let total = self.total;
        self.levels
            .iter()
            .flatten()
            .map(move |(s, c)| (s, Support::new(*c, total)))
    }

    pub fn support(&self, set: &Itemset) -> Option<Support> {
        self.count(set).map(|c| Support::new(c, self.total))
    }

    fn count(&self, set: &Itemset) -> Option<usize> {
        let level = self.level(set.len());
        level
            .binary_search_by(|(s, _)| s.cmp(set))
            .ok()
            .map(|i| level[i].1)
    }

    /// True when every `(k-1)`-subset of every stored `k`-itemset is stored.
    pub fn is_downward_closed(&self) -> bool {
        self.levels.iter().skip(1).flatten().all(|(set, _)| {
            (0..set.len()).all(|skip| {
                let sub = Itemset::from_sorted(
                    set.iter()
                        .enumerate()
                        .filter(|(i, _)| *i != skip)
                        .map(|(_, id)| id)
                        .collect(),
                );
                self.count(&sub).is_some()
            })
        })
    }
}

/// Joins frequent `(k-1)`-itemsets sharing their first `k-2` items and
/// drops candidates with an infrequent `(k-1)`-subset.
///
/// Input must be canonically sorted, duplicate-free and of one size; the
/// output is canonically sorted and duplicate-free.
pub fn candidate_join(prev_level: &[Itemset]) -> Result<Vec<Itemset>> {
    let Some(first) = prev_level.first() else {
        return Ok(Vec::new());
    };
    let k1 = first.len();
    if k1 == 0 {
        return Err(Error::MalformedLevel("empty itemsets"));
    }
    if prev_level.iter().any(|s| s.len() != k1) {
        return Err(Error::MalformedLevel("mixed itemset sizes"));
    }
    if prev_level.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::MalformedLevel(
            "level not canonically sorted or has duplicates",
        ));
    }
    let prefix = k1 - 1;
    let mut out = Vec::new();
    let mut start = 0;
    while start < prev_level.len() {
        let head = &prev_level[start].items()[..prefix];
        let mut end = start + 1;
        while end < prev_level.len() && &prev_level[end].items()[..prefix] == head {
            end += 1;
        }
        for i in start..end {
            for j in i + 1..end {
                let mut ids = prev_level[i].items().to_vec();
                ids.push(prev_level[j].items()[prefix]);
                let cand = Itemset::from_sorted(ids);
                if all_subsets_present(&cand, prev_level) {
                    out.push(cand);
                }
            }
        }
        start = end;
    }
    Ok(out)
}

fn all_subsets_present(cand: &Itemset, prev_level: &[Itemset]) -> bool {
    // dropping either of the last two items gives the joined parents
    let k = cand.len();
    (0..k.saturating_sub(2)).all(|skip| {
        let sub = Itemset::from_sorted(
            cand.iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, id)| id)
                .collect(),
        );
        prev_level.binary_search(&sub).is_ok()
    })
}

fn has_attribute_clash(universe: &ItemUniverse, set: &Itemset) -> bool {
    set.items()
        .windows(2)
        .any(|w| universe.same_attribute(w[0], w[1]))
}

pub fn frequent_itemsets_apriori(
    db: &TransactionDb,
    min_support: f64,
) -> Result<FrequentItemsetTable> {
    frequent_itemsets_apriori_bounded(db, min_support, None)
}

/// Apriori with an optional cap on itemset size.
pub fn frequent_itemsets_apriori_bounded(
    db: &TransactionDb,
    min_support: f64,
    max_len: Option<usize>,
) -> Result<FrequentItemsetTable> {
    check_fraction("min_support", min_support, false)?;
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let min_count = min_support_count(min_support, db.len())?;
    let max_len = max_len.unwrap_or(usize::MAX);
    let universe = db.universe();

    let mut item_counts = alloc::vec![0usize; universe.len()];
    for t in db.transactions() {
        for id in t.iter() {
            item_counts[id.index()] += 1;
        }
    }
    let mut level: Vec<(Itemset, usize)> = item_counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c >= min_count)
        .map(|(i, c)| {
            (
                Itemset::from_sorted(alloc::vec![crate::ItemId(i as u32)]),
                *c,
            )
        })
        .collect();

    let mut levels = Vec::new();
    while !level.is_empty() {
        let k = level[0].0.len();
        let sets: Vec<Itemset> = level.iter().map(|(s, _)| s.clone()).collect();
        levels.push(level);
        if k >= max_len {
            break;
        }
        let mut candidates = candidate_join(&sets)?;
        // two values of one attribute never co-occur in a record
        candidates.retain(|c| !has_attribute_clash(universe, c));
        let counts = db.support_counts(&candidates);
        level = candidates
            .into_iter()
            .zip(counts)
            .filter(|(_, c)| *c >= min_count)
            .collect();
    }
    Ok(FrequentItemsetTable {
        levels,
        min_support,
        min_count,
        total: db.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Apriori,
    FpGrowth,
}

/// Thresholds and back end for rule mining. Defaults: support 0.1,
/// confidence 0.9, lift 1.0 (strict), Apriori, itemsets of at most 4 items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    /// Rules must have lift strictly greater than this.
    pub min_lift: f64,
    pub algorithm: Algorithm,
    /// Maximum number of items in a rule (antecedent plus consequent).
    pub max_rule_len: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_support: 0.1,
            min_confidence: 0.9,
            min_lift: 1.0,
            algorithm: Algorithm::Apriori,
            max_rule_len: 4,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        check_fraction("min_support", self.min_support, false)?;
        check_fraction("min_confidence", self.min_confidence, true)?;
        if !(self.min_lift >= 0.0 && self.min_lift.is_finite()) {
            return Err(Error::InvalidThreshold {
                name: "min_lift",
                value: self.min_lift,
            });
        }
        if self.max_rule_len < 2 {
            return Err(Error::InvalidThreshold {
                name: "max_rule_len",
                value: self.max_rule_len as f64,
            });
        }
        Ok(())
    }

    /// Whether a rule's metrics pass all three thresholds.
    pub fn accepts(&self, m: &RuleMetrics) -> bool {
        m.support >= self.min_support
            && m.confidence >= self.min_confidence
            && m.lift > self.min_lift
    }
}

/// Frequent itemsets with the configured back end and length bound.
pub fn frequent_itemsets(db: &TransactionDb, cfg: &MiningConfig) -> Result<FrequentItemsetTable> {
    cfg.validate()?;
    match cfg.algorithm {
        Algorithm::Apriori => {
            frequent_itemsets_apriori_bounded(db, cfg.min_support, Some(cfg.max_rule_len))
        }
        Algorithm::FpGrowth => {
            if db.is_empty() {
                return Err(Error::EmptyDatabase);
            }
            let tree = fpgrowth::build_fp_tree(db, cfg.min_support)?;
            let patterns =
                fpgrowth::fp_growth_bounded(&tree, cfg.min_support, Some(cfg.max_rule_len))?;
            FrequentItemsetTable::from_counts(
                patterns
                    .into_iter()
                    .map(|(s, sup)| (s, sup.count))
                    .collect(),
                cfg.min_support,
                db.len(),
            )
        }
    }
}

/// Expands every frequent itemset of size >= 2 into rules and keeps those
/// passing confidence and lift, sorted by lift then confidence (both
/// descending) then antecedent and consequent in canonical order.
pub fn rules_from_table(
    table: &FrequentItemsetTable,
    cfg: &MiningConfig,
) -> Result<Vec<(AssociationRule, RuleMetrics)>> {
    cfg.validate()?;
    let mut rules = Vec::new();
    for k in 2..=table.max_len().min(cfg.max_rule_len) {
        for (set, joint) in table.level(k) {
            let expanded = expand_rules(set, *joint, table.total(), cfg.min_confidence, |sub| {
                table.count(sub).ok_or(Error::MalformedLevel(
                    "frequent itemset table is not downward closed",
                ))
            })?;
            rules.extend(expanded.into_iter().filter(|(_, m)| cfg.accepts(m)));
        }
    }
    sort_rules(&mut rules);
    Ok(rules)
}

pub(crate) fn sort_rules(rules: &mut [(AssociationRule, RuleMetrics)]) {
    rules.sort_by(|(ra, ma), (rb, mb)| {
        ma.cmp_strength(mb)
            .then_with(|| ra.antecedent.cmp(&rb.antecedent))
            .then_with(|| ra.consequent.cmp(&rb.consequent))
    });
}

/// Mines all rules meeting `cfg`'s support, confidence and lift thresholds.
pub fn mine_rules(
    db: &TransactionDb,
    cfg: &MiningConfig,
) -> Result<Vec<(AssociationRule, RuleMetrics)>> {
    let table = frequent_itemsets(db, cfg)?;
    rules_from_table(&table, cfg)
}
