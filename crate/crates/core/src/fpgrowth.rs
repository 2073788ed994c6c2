//! FP-tree construction and pattern-growth mining.
//!
//! The tree is built in two scans: the first counts items and fixes the
//! frequent-item order `F` (count descending, ties by canonical item order),
//! the second inserts each transaction's frequent items in `F` order. Mining
//! walks the header table from the least frequent item, building a
//! conditional tree from each item's prefix paths.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::db::TransactionDb;
use crate::error::{Error, Result};
use crate::item::{ItemId, Itemset};
use crate::metrics::{check_fraction, min_support_count, Support};
use crate::par;

/// Maximum recursion depth of [`fp_growth`].
pub const MAX_DEPTH: usize = 64;

const ROOT: usize = 0;

#[derive(Debug, Clone)]
struct Node {
    /// Rank in the header table; unused for the root.
    rank: usize,
    count: usize,
    parent: usize,
    children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderEntry {
    pub item: ItemId,
    /// Global count of the item.
    pub count: usize,
    /// Every tree node labelled with this item.
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FpTree {
    nodes: Vec<Node>,
    header: Vec<HeaderEntry>,
    min_count: usize,
    total: usize,
}

impl FpTree {
    /// Builds a tree from weighted transactions (each a list of distinct
    /// items). Items below `min_count` are dropped.
    fn from_weighted(paths: &[(Vec<ItemId>, usize)], min_count: usize, total: usize) -> Self {
        let mut counts: BTreeMap<ItemId, usize> = BTreeMap::new();
        for (items, w) in paths {
            for id in items {
                *counts.entry(*id).or_default() += w;
            }
        }
        let mut order: Vec<(ItemId, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        // BTreeMap iteration is canonical, and the sort is stable
        order.sort_by_key(|&(_, c)| core::cmp::Reverse(c));
        let rank_of: BTreeMap<ItemId, usize> = order
            .iter()
            .enumerate()
            .map(|(r, (id, _))| (*id, r))
            .collect();
        let mut tree = FpTree {
            nodes: vec![Node {
                rank: usize::MAX,
                count: 0,
                parent: ROOT,
                children: Vec::new(),
            }],
            header: order
                .into_iter()
                .map(|(item, count)| HeaderEntry {
                    item,
                    count,
                    nodes: Vec::new(),
                })
                .collect(),
            min_count,
            total,
        };
        let mut ranks = Vec::new();
        for (items, w) in paths {
            ranks.clear();
            ranks.extend(items.iter().filter_map(|id| rank_of.get(id).copied()));
            ranks.sort_unstable();
            tree.insert(&ranks, *w);
        }
        tree
    }

    fn insert(&mut self, ranks: &[usize], weight: usize) {
        let mut cur = ROOT;
        for &rank in ranks {
            let existing = self.nodes[cur]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].rank == rank);
            cur = match existing {
                Some(child) => {
                    self.nodes[child].count += weight;
                    child
                }
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(Node {
                        rank,
                        count: weight,
                        parent: cur,
                        children: Vec::new(),
                    });
                    self.nodes[cur].children.push(id);
                    self.header[rank].nodes.push(id);
                    id
                }
            };
        }
    }

    /// Header table in `F` order (most frequent first).
    pub fn header(&self) -> &[HeaderEntry] {
        &self.header
    }

    /// Frequent-item order `F`.
    pub fn item_order(&self) -> Vec<ItemId> {
        self.header.iter().map(|h| h.item).collect()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of item nodes (the root excluded).
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// True when the tree has no item nodes.
    pub fn is_bare(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Every root-to-leaf path as `(item, count)` pairs, children visited
    /// in insertion order.
    pub fn paths(&self) -> Vec<Vec<(ItemId, usize)>> {
        let mut out = Vec::new();
        let mut stack = vec![(ROOT, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            let children = &self.nodes[node].children;
            if children.is_empty() && node != ROOT {
                out.push(path);
                continue;
            }
            for &c in children.iter().rev() {
                let mut p = path.clone();
                p.push((self.header[self.nodes[c].rank].item, self.nodes[c].count));
                stack.push((c, p));
            }
        }
        out
    }

    /// Checks the structural invariants: header chains sum to the global
    /// item counts, ranks strictly increase along every path, and a node's
    /// count covers the counts of its children.
    pub fn check_invariants(&self) -> bool {
        let chains_ok = self.header.iter().enumerate().all(|(rank, h)| {
            h.nodes.iter().all(|&n| self.nodes[n].rank == rank)
                && h.nodes.iter().map(|&n| self.nodes[n].count).sum::<usize>() == h.count
        });
        let order_ok = self.nodes.iter().enumerate().skip(1).all(|(i, n)| {
            let parent = &self.nodes[n.parent];
            (n.parent == ROOT || parent.rank < n.rank) && parent.children.contains(&i)
        });
        let counts_ok = self.nodes.iter().skip(1).all(|n| {
            n.children
                .iter()
                .map(|&c| self.nodes[c].count)
                .sum::<usize>()
                <= n.count
        });
        chains_ok && order_ok && counts_ok
    }

    /// Prefix paths (excluding the item itself) of every node in the
    /// header chain of `rank`, weighted by the node counts.
    fn conditional_base(&self, rank: usize) -> Vec<(Vec<ItemId>, usize)> {
        self.header[rank]
            .nodes
            .iter()
            .map(|&n| {
                let mut path = Vec::new();
                let mut cur = self.nodes[n].parent;
                while cur != ROOT {
                    path.push(self.header[self.nodes[cur].rank].item);
                    cur = self.nodes[cur].parent;
                }
                (path, self.nodes[n].count)
            })
            .collect()
    }
}

/// First scan counts items and fixes `F`; the second inserts transactions.
pub fn build_fp_tree(db: &TransactionDb, min_support: f64) -> Result<FpTree> {
    check_fraction("min_support", min_support, false)?;
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let min_count = min_support_count(min_support, db.len())?;
    let paths: Vec<(Vec<ItemId>, usize)> = db
        .transactions()
        .iter()
        .map(|t| (t.items().to_vec(), 1))
        .collect();
    Ok(FpTree::from_weighted(&paths, min_count, db.len()))
}

/// All frequent itemsets encoded in `tree` with their supports, sorted by
/// size then canonical order.
pub fn fp_growth(tree: &FpTree, min_support: f64) -> Result<Vec<(Itemset, Support)>> {
    fp_growth_bounded(tree, min_support, None)
}

/// [`fp_growth`] with an optional cap on itemset size.
pub fn fp_growth_bounded(
    tree: &FpTree,
    min_support: f64,
    max_len: Option<usize>,
) -> Result<Vec<(Itemset, Support)>> {
    check_fraction("min_support", min_support, false)?;
    let min_count = min_support_count(min_support, tree.total)?;
    if min_count < tree.min_count {
        return Err(Error::ThresholdBelowTree);
    }
    let max_len = max_len.unwrap_or(usize::MAX);
    if max_len == 0 {
        return Ok(Vec::new());
    }
    // top-level header items are independent; mine them in parallel
    let ranks: Vec<usize> = (0..tree.header.len()).rev().collect();
    let parts = par::map(&ranks, |&rank| {
        let mut out = Vec::new();
        grow_item(tree, rank, &[], min_count, max_len, 1, &mut out).map(|_| out)
    });
    let mut all = Vec::new();
    for part in parts {
        all.extend(part?);
    }
    let mut result: Vec<(Itemset, Support)> = all
        .into_iter()
        .map(|(ids, c)| (Itemset::new(ids), Support::new(c, tree.total)))
        .collect();
    result.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(result)
}

fn grow(
    tree: &FpTree,
    suffix: &[ItemId],
    min_count: usize,
    max_len: usize,
    depth: usize,
    out: &mut Vec<(Vec<ItemId>, usize)>,
) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::RecursionLimit(MAX_DEPTH));
    }
    for rank in (0..tree.header.len()).rev() {
        grow_item(tree, rank, suffix, min_count, max_len, depth, out)?;
    }
    Ok(())
}

fn grow_item(
    tree: &FpTree,
    rank: usize,
    suffix: &[ItemId],
    min_count: usize,
    max_len: usize,
    depth: usize,
    out: &mut Vec<(Vec<ItemId>, usize)>,
) -> Result<()> {
    let entry = &tree.header[rank];
    if entry.count < min_count {
        return Ok(());
    }
    let mut pattern = suffix.to_vec();
    pattern.push(entry.item);
    out.push((pattern.clone(), entry.count));
    if pattern.len() >= max_len {
        return Ok(());
    }
    let base = tree.conditional_base(rank);
    let cond = FpTree::from_weighted(&base, min_count, tree.total);
    if !cond.is_bare() {
        grow(&cond, &pattern, min_count, max_len, depth + 1, out)?;
    }
    Ok(())
}
