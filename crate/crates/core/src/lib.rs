//! Frequent pattern mining and engagement analytics core.
//!
//! Everything in this crate is pure computation over in-memory data and
//! builds without `std` (only `alloc` is required). File formats, the
//! synthetic cohort generator and the command line live in the
//! `engage-miner` crate.
//!
//! The pieces:
//!
//! * [`item`] / [`db`]: attribute=value items, canonical itemsets and the
//!   immutable transaction database.
//! * [`metrics`]: exact support, confidence and lift from integer counts,
//!   plus rule expansion from a frequent itemset.
//! * [`apriori`] and [`fpgrowth`]: two independent frequent itemset miners
//!   that must agree exactly; [`apriori::mine_rules`] drives rule mining.
//! * [`gsp`]: level-wise sequential pattern mining over event sequences.
//! * [`engagement`]: event and grade records, engagement metrics,
//!   discretization and the 18-field student feature vector.
//! * [`kmeans`]: seeded Lloyd clustering and L/M/H level labelling.
//! * [`oracle`]: exhaustive brute-force reference miners used by tests.
//!
//! Enable the `parallel` feature to fan support counting out over rayon.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod apriori;
pub mod db;
pub mod engagement;
mod error;
pub mod fpgrowth;
pub mod gsp;
pub mod item;
pub mod kmeans;
pub mod metrics;
pub mod oracle;
mod par;

pub use apriori::{
    candidate_join, frequent_itemsets_apriori, frequent_itemsets_apriori_bounded, mine_rules,
    Algorithm, FrequentItemsetTable, MiningConfig,
};
pub use db::TransactionDb;
pub use error::{Error, Result};
pub use fpgrowth::{build_fp_tree, fp_growth, FpTree};
pub use gsp::{build_sequences, gsp_mine, EventSequence, SequencePattern};
pub use item::{Item, ItemId, ItemUniverse, Itemset, Value};
pub use metrics::{
    confidence, lift, min_support_count, rules_from_itemset, support, AssociationRule, RuleMetrics,
    Support,
};
