//! Items, itemsets and the declared item universe.
//!
//! An [`Item`] is an `attribute=value` token. Items are totally ordered by
//! attribute name and then value; that order is the canonical order every
//! itemset and every enumeration in this crate follows. Inside a
//! [`TransactionDb`](crate::TransactionDb) items are referred to by dense
//! [`ItemId`]s assigned in canonical order, so comparing ids compares items.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Discrete value of an attribute.
///
/// Integers (multiples of 10 after discretization) sort before labels;
/// integers sort numerically and labels lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Label(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Label(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item {
    pub attribute: String,
    pub value: Value,
}

impl Item {
    pub fn new(attribute: impl Into<String>, value: impl Into<Value>) -> Self {
        Item {
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    /// A presence item (`name=1`), for market-basket style data where an
    /// attribute is either in the transaction or not.
    pub fn flag(name: impl Into<String>) -> Self {
        Item::new(name, Value::Int(1))
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

/// Index of an item in its [`ItemUniverse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A canonically sorted, duplicate-free set of item ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    pub fn empty() -> Self {
        Itemset(Vec::new())
    }

    /// Sorts and deduplicates `ids`.
    pub fn new(mut ids: Vec<ItemId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Itemset(ids)
    }

    /// Wraps ids that the caller guarantees are strictly ascending.
    pub(crate) fn from_sorted(ids: Vec<ItemId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Itemset(ids)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        let mut rest = other.0.iter();
        'outer: for id in &self.0 {
            for o in rest.by_ref() {
                if o == id {
                    continue 'outer;
                }
                if o > id {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn is_disjoint(&self, other: &Itemset) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &Itemset) -> Itemset {
        let mut ids = Vec::with_capacity(self.len() + other.len());
        ids.extend_from_slice(&self.0);
        ids.extend_from_slice(&other.0);
        Itemset::new(ids)
    }

    pub fn difference(&self, other: &Itemset) -> Itemset {
        Itemset(
            self.0
                .iter()
                .copied()
                .filter(|id| !other.contains(*id))
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<ItemId> for Itemset {
    fn from_iter<I: IntoIterator<Item = ItemId>>(iter: I) -> Self {
        Itemset::new(iter.into_iter().collect())
    }
}

/// The declared set of all items (attributes and their value domains).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ItemUniverse {
    items: Vec<Item>,
    attributes: Vec<String>,
    attribute_of: Vec<u32>,
}

impl ItemUniverse {
    pub fn new(items: impl IntoIterator<Item = Item>) -> Result<Self> {
        let mut items: Vec<Item> = items.into_iter().collect();
        items.sort();
        items.dedup();
        let mut attributes: Vec<String> = Vec::new();
        let mut attribute_of = Vec::with_capacity(items.len());
        for item in &items {
            if item.attribute.is_empty() {
                return Err(Error::UnknownItem(item.to_string()));
            }
            if attributes.last() != Some(&item.attribute) {
                attributes.push(item.attribute.clone());
            }
            attribute_of.push((attributes.len() - 1) as u32);
        }
        Ok(ItemUniverse {
            items,
            attributes,
            attribute_of,
        })
    }

    /// Number of instantiated items.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, id: ItemId) -> &Item {
        &self.items[id.index()]
    }

    pub fn id_of(&self, item: &Item) -> Option<ItemId> {
        self.items
            .binary_search(item)
            .ok()
            .map(|i| ItemId(i as u32))
    }

    /// Index into [`attributes`](Self::attributes) of the item's attribute.
    pub fn attribute_index(&self, id: ItemId) -> usize {
        self.attribute_of[id.index()] as usize
    }

    pub fn same_attribute(&self, a: ItemId, b: ItemId) -> bool {
        self.attribute_of[a.index()] == self.attribute_of[b.index()]
    }

    /// Looks items up and builds a canonical itemset, enforcing the
    /// one-value-per-attribute rule.
    pub fn itemset<'a>(&self, items: impl IntoIterator<Item = &'a Item>) -> Result<Itemset> {
        let mut ids = Vec::new();
        for item in items {
            ids.push(
                self.id_of(item)
                    .ok_or_else(|| Error::UnknownItem(item.to_string()))?,
            );
        }
        let set = Itemset::new(ids);
        self.check(&set)?;
        Ok(set)
    }

    /// Verifies that every id is known and no attribute repeats.
    pub fn check(&self, set: &Itemset) -> Result<()> {
        for id in set.iter() {
            if id.index() >= self.items.len() {
                return Err(Error::UnknownItem(alloc::format!("#{}", id.0)));
            }
        }
        // ids sorted => items sorted => same-attribute items are adjacent
        for w in set.items().windows(2) {
            if self.same_attribute(w[0], w[1]) {
                return Err(Error::AttributeConflict(
                    self.attributes[self.attribute_index(w[0])].clone(),
                ));
            }
        }
        Ok(())
    }

    /// Renders items joined by `" & "`.
    pub fn render(&self, set: &Itemset) -> String {
        let mut out = String::new();
        for (i, id) in set.iter().enumerate() {
            if i > 0 {
                out.push_str(" & ");
            }
            out.push_str(&self.item(id).to_string());
        }
        out
    }

    /// Item labels in canonical order.
    pub fn labels(&self, set: &Itemset) -> Vec<String> {
        set.iter().map(|id| self.item(id).to_string()).collect()
    }
}
