//! The immutable transaction database.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::item::{Item, ItemId, ItemUniverse, Itemset};
use crate::par;

/// A set of transactions over a declared [`ItemUniverse`].
///
/// Immutable once built. Each transaction also carries a bitset over item
/// ids so subset tests cost one probe per item of the query.
#[derive(Debug, Clone)]
pub struct TransactionDb {
    universe: ItemUniverse,
    transactions: Vec<Itemset>,
    record_ids: Vec<String>,
    words: usize,
    bits: Vec<u64>,
}

impl TransactionDb {
    /// Builds a database over a declared universe. Every item must be in
    /// the universe and no record may hold two values of one attribute.
    pub fn with_universe(
        universe: ItemUniverse,
        record_ids: Vec<String>,
        records: Vec<Vec<Item>>,
    ) -> Result<Self> {
        if record_ids.len() != records.len() {
            return Err(Error::RecordCountMismatch {
                transactions: records.len(),
                ids: record_ids.len(),
            });
        }
        let mut transactions = Vec::with_capacity(records.len());
        for record in &records {
            let set = universe.itemset(record)?;
            if set.len() != record.len() {
                let mut attrs: Vec<&str> = record.iter().map(|i| i.attribute.as_str()).collect();
                attrs.sort_unstable();
                let dup = attrs.windows(2).find(|w| w[0] == w[1]).map_or("", |w| w[0]);
                return Err(Error::AttributeConflict(dup.into()));
            }
            transactions.push(set);
        }
        Ok(Self::from_parts(universe, record_ids, transactions))
    }

    /// Builds a database whose universe is exactly the items observed.
    pub fn from_records(records: Vec<(String, Vec<Item>)>) -> Result<Self> {
        let universe = ItemUniverse::new(records.iter().flat_map(|(_, r)| r.iter().cloned()))?;
        let (ids, recs): (Vec<_>, Vec<_>) = records.into_iter().unzip();
        Self::with_universe(universe, ids, recs)
    }

    /// Market-basket shorthand: every token becomes a presence item and
    /// records are numbered `t0, t1, ...`.
    pub fn from_flags(rows: &[&[&str]]) -> Result<Self> {
        Self::from_records(
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    (
                        format!("t{i}"),
                        row.iter().map(|t| Item::flag(*t)).collect(),
                    )
                })
                .collect(),
        )
    }

    /// Builds from already-encoded itemsets. Each itemset is validated
    /// against the universe.
    pub fn from_itemsets(
        universe: ItemUniverse,
        record_ids: Vec<String>,
        transactions: Vec<Itemset>,
    ) -> Result<Self> {
        if record_ids.len() != transactions.len() {
            return Err(Error::RecordCountMismatch {
                transactions: transactions.len(),
                ids: record_ids.len(),
            });
        }
        for t in &transactions {
            universe.check(t)?;
        }
        Ok(Self::from_parts(universe, record_ids, transactions))
    }

    fn from_parts(
        universe: ItemUniverse,
        record_ids: Vec<String>,
        transactions: Vec<Itemset>,
    ) -> Self {
        let words = universe.len().div_ceil(64).max(1);
        let mut bits = vec![0u64; words * transactions.len()];
        for (row, t) in transactions.iter().enumerate() {
            for id in t.iter() {
                bits[row * words + id.index() / 64] |= 1 << (id.index() % 64);
            }
        }
        TransactionDb {
            universe,
            transactions,
            record_ids,
            words,
            bits,
        }
    }

    pub fn universe(&self) -> &ItemUniverse {
        &self.universe
    }

    pub fn transactions(&self) -> &[Itemset] {
        &self.transactions
    }

    pub fn record_ids(&self) -> &[String] {
        &self.record_ids
    }

    /// Number of transactions, `m`.
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Looks up items by value; see [`ItemUniverse::itemset`].
    pub fn itemset<'a>(&self, items: impl IntoIterator<Item = &'a Item>) -> Result<Itemset> {
        self.universe.itemset(items)
    }

    /// Shorthand for presence items created by [`from_flags`](Self::from_flags).
    pub fn flags(&self, names: &[&str]) -> Result<Itemset> {
        let items: Vec<Item> = names.iter().map(|n| Item::flag(*n)).collect();
        self.universe.itemset(&items)
    }

    #[inline]
    fn row_contains(&self, row: usize, set: &[ItemId]) -> bool {
        let base = row * self.words;
        set.iter()
            .all(|id| self.bits[base + id.index() / 64] & (1 << (id.index() % 64)) != 0)
    }

    /// Number of transactions containing `set`.
    pub fn support_count(&self, set: &Itemset) -> Result<usize> {
        self.universe.check(set)?;
        Ok((0..self.len())
            .filter(|&row| self.row_contains(row, set.items()))
            .count())
    }

    /// Counts every candidate in one pass over the transactions. Rows are
    /// partitioned across workers when the `parallel` feature is on.
    pub(crate) fn support_counts(&self, candidates: &[Itemset]) -> Vec<usize> {
        let rows: Vec<usize> = (0..self.len()).collect();
        par::count_over(&rows, candidates.len(), |&row, acc| {
            for (slot, cand) in acc.iter_mut().zip(candidates) {
                if self.row_contains(row, cand.items()) {
                    *slot += 1;
                }
            }
        })
    }
}
