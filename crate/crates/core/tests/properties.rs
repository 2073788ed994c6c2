//! Property tests: miners against the exhaustive oracles, metric
//! identities, and clustering invariants.

use std::collections::BTreeSet;

use engage_miner_core::apriori::rules_from_table;
use engage_miner_core::engagement::discretize;
use engage_miner_core::fpgrowth::fp_growth;
use engage_miner_core::gsp::EventSequence;
use engage_miner_core::kmeans::{kmeans, label_levels, FeatureMatrix, KMeansParams, LevelScoring};
use engage_miner_core::metrics::evaluate;
use engage_miner_core::oracle::{
    brute_force_frequent_itemsets, brute_force_rules, brute_force_sequences, count_containing,
};
use engage_miner_core::{
    build_fp_tree, frequent_itemsets_apriori, gsp_mine, mine_rules, support, Algorithm,
    AssociationRule, Item, ItemUniverse, Itemset, MiningConfig, TransactionDb,
};
use proptest::prelude::*;

/// Up to 6 attributes with 1..=3 values; each record holds an optional
/// value per attribute.
fn arb_db() -> impl Strategy<Value = TransactionDb> {
    prop::collection::vec(1usize..=3, 1..=6)
        .prop_flat_map(|domains| {
            let row = domains
                .iter()
                .map(|&d| prop::option::of(0..d))
                .collect::<Vec<_>>();
            (Just(domains), prop::collection::vec(row, 1..=20))
        })
        .prop_map(|(domains, rows)| {
            let universe = ItemUniverse::new(domains.iter().enumerate().flat_map(|(a, &d)| {
                (0..d).map(move |v| Item::new(format!("a{a}"), v as i64 * 10))
            }))
            .unwrap();
            let records = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter_map(|(a, v)| v.map(|v| Item::new(format!("a{a}"), v as i64 * 10)))
                        .collect()
                })
                .collect();
            let ids = (0..rows.len()).map(|i| format!("t{i}")).collect();
            TransactionDb::with_universe(universe, ids, records).unwrap()
        })
}

/// A random itemset drawn from the items of one transaction (so it
/// respects one value per attribute), plus a subset of it.
fn pick_nested(db: &TransactionDb, row: usize, mask_y: u32, mask_x: u32) -> (Itemset, Itemset) {
    let t = &db.transactions()[row % db.len()];
    let y: Itemset = t
        .iter()
        .enumerate()
        .filter(|(i, _)| mask_y & (1 << i) != 0)
        .map(|(_, id)| id)
        .collect();
    let x: Itemset = y
        .iter()
        .enumerate()
        .filter(|(i, _)| mask_x & (1 << i) != 0)
        .map(|(_, id)| id)
        .collect();
    (x, y)
}

fn as_set(v: impl IntoIterator<Item = (Itemset, usize)>) -> BTreeSet<(Itemset, usize)> {
    v.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn support_is_anti_monotone(db in arb_db(), row in 0usize..64, my in any::<u32>(), mx in any::<u32>()) {
        let (x, y) = pick_nested(&db, row, my, mx);
        prop_assert!(x.is_subset_of(&y));
        prop_assert!(support(&x, &db).unwrap() >= support(&y, &db).unwrap());
    }

    #[test]
    fn metric_ranges_and_identities(db in arb_db(), mx in any::<u32>()) {
        // the widest row, split so both sides are nonempty
        let widest = db.transactions().iter().max_by_key(|t| t.len()).unwrap();
        prop_assume!(widest.len() >= 2);
        let n = widest.len();
        let x: Itemset = widest.iter().enumerate().filter(|&(i, _)| i == 0 || (i + 1 < n && mx & (1 << i) != 0)).map(|(_, id)| id).collect();
        let xy = widest.clone();
        let y = xy.difference(&x);
        let rule = AssociationRule::new(x.clone(), y.clone()).unwrap();
        let m = evaluate(&rule, &db).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.support));
        prop_assert!((0.0..=1.0).contains(&m.confidence));
        prop_assert!(m.lift >= 0.0);
        prop_assert!(m.confidence >= m.support);
        let supp_y = support(&y, &db).unwrap();
        prop_assert!(((m.confidence / supp_y) - m.lift).abs() <= 1e-12 * m.lift.max(1.0));
        let reverse = evaluate(&AssociationRule::new(y, x).unwrap(), &db).unwrap();
        prop_assert_eq!(m.lift, reverse.lift);
        // counts equal a direct scan
        prop_assert_eq!(m.joint_count, count_containing(&xy, db.transactions()));
    }

    #[test]
    fn miners_match_oracle(db in arb_db(), s in 0.05f64..=1.0) {
        let oracle = as_set(brute_force_frequent_itemsets(&db, s).unwrap().into_iter().map(|(i, sup)| (i, sup.count)));
        let table = frequent_itemsets_apriori(&db, s).unwrap();
        prop_assert!(table.is_downward_closed());
        let apriori = as_set(table.iter().map(|(i, sup)| (i.clone(), sup.count)));
        let tree = build_fp_tree(&db, s).unwrap();
        prop_assert!(tree.check_invariants());
        let fp = as_set(fp_growth(&tree, s).unwrap().into_iter().map(|(i, sup)| (i, sup.count)));
        prop_assert_eq!(&apriori, &oracle);
        prop_assert_eq!(&fp, &oracle);
    }

    #[test]
    fn fp_tree_header_counts_equal_item_counts(db in arb_db(), s in 0.05f64..=1.0) {
        let tree = build_fp_tree(&db, s).unwrap();
        for h in tree.header() {
            let single = Itemset::new(vec![h.item]);
            prop_assert_eq!(h.count, count_containing(&single, db.transactions()));
        }
    }

    #[test]
    fn rules_are_sound_and_complete(db in arb_db(), s in 0.05f64..=0.6, c in 0.0f64..=1.0, l in 0.0f64..=2.0, max_len in 2usize..=4) {
        let cfg = MiningConfig { min_support: s, min_confidence: c, min_lift: l, max_rule_len: max_len, ..Default::default() };
        let apriori = mine_rules(&db, &cfg).unwrap();
        let fp = mine_rules(&db, &MiningConfig { algorithm: Algorithm::FpGrowth, ..cfg }).unwrap();
        prop_assert_eq!(&apriori, &fp);
        for (_, m) in &apriori {
            prop_assert!(m.support >= s && m.confidence >= c && m.lift > l);
        }
        let mined: BTreeSet<(Itemset, Itemset)> = apriori.iter().map(|(r, _)| (r.antecedent.clone(), r.consequent.clone())).collect();
        let oracle: BTreeSet<(Itemset, Itemset)> = brute_force_rules(&db, s, c, l, max_len)
            .unwrap()
            .into_iter()
            .map(|r| (r.antecedent, r.consequent))
            .collect();
        prop_assert_eq!(mined, oracle);
        // sorted by lift then confidence, descending
        for w in apriori.windows(2) {
            prop_assert!(w[0].1.lift >= w[1].1.lift);
        }
    }

    #[test]
    fn rule_table_is_deterministic(db in arb_db()) {
        let cfg = MiningConfig { min_support: 0.1, min_confidence: 0.5, ..Default::default() };
        let t1 = frequent_itemsets_apriori(&db, 0.1).unwrap();
        let t2 = frequent_itemsets_apriori(&db, 0.1).unwrap();
        prop_assert_eq!(rules_from_table(&t1, &cfg).unwrap(), rules_from_table(&t2, &cfg).unwrap());
    }

    #[test]
    fn gsp_matches_oracle(
        seqs in prop::collection::vec(prop::collection::vec(0u8..6, 1..=6), 1..=15),
        s in 0.05f64..=1.0,
        max_len in 1usize..=4,
    ) {
        let seqs: Vec<EventSequence> = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| EventSequence {
                student_id: format!("s{i}"),
                events: s.iter().map(|t| char::from(b'A' + t).to_string()).collect(),
            })
            .collect();
        let mined = gsp_mine(&seqs, s, max_len).unwrap();
        let oracle = brute_force_sequences(&seqs, s, max_len).unwrap();
        prop_assert_eq!(&mined, &oracle);
        let emitted: BTreeSet<&[String]> = mined.iter().map(|p| p.elements.as_slice()).collect();
        for p in &mined {
            if p.elements.len() > 1 {
                for skip in 0..p.elements.len() {
                    let mut sub = p.elements.clone();
                    sub.remove(skip);
                    prop_assert!(emitted.contains(sub.as_slice()));
                }
            }
        }
    }

    #[test]
    fn discretize_stays_within_five(v in 0.0f64..10_000.0) {
        let r = discretize(v).unwrap();
        prop_assert_eq!(r % 10, 0);
        prop_assert!((v - r as f64).abs() <= 5.0);
        prop_assert!(r >= 0);
    }

    #[test]
    fn kmeans_invariants(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 3..40),
        seed in any::<u64>(),
        perm in 0usize..6,
    ) {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let m = FeatureMatrix::new(ids, rows).unwrap();
        let params = KMeansParams { seed, ..Default::default() };
        let a = kmeans(&m, params).unwrap();
        let b = kmeans(&m, params).unwrap();
        prop_assert_eq!(&a, &b);
        for w in a.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0], "inertia rose: {:?}", a.inertia_history);
        }
        // relabelling clusters does not change levels
        let scoring = LevelScoring { score_dims: vec![0, 1], tie_dim: 2 };
        let levels = label_levels(&a.centroids, &a.assignments, &scoring).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let p = perms[perm];
        let mut centroids = vec![Vec::new(); 3];
        for (old, &new) in p.iter().enumerate() {
            centroids[new] = a.centroids[old].clone();
        }
        let assignments: Vec<usize> = a.assignments.iter().map(|&j| p[j]).collect();
        prop_assert_eq!(levels, label_levels(&centroids, &assignments, &scoring).unwrap());
    }
}
