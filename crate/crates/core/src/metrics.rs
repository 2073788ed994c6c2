//! Support, confidence and lift.
//!
//! All three metrics come from integer co-occurrence counts and are divided
//! exactly once, so two routes that count the same transactions produce
//! bit-identical fractions.
//!
//! * `support(X)      = |{t : X ⊆ t}| / m`
//! * `confidence(X⇒Y) = count(X ∪ Y) / count(X)`
//! * `lift(X⇒Y)       = count(X ∪ Y) · m / (count(X) · count(Y))`

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::db::TransactionDb;
use crate::error::{Error, Result};
use crate::item::Itemset;

/// An exact support value: `count` of `total` transactions (or sequences).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Support {
    pub count: usize,
    pub total: usize,
}

impl Support {
    pub fn new(count: usize, total: usize) -> Self {
        Support { count, total }
    }

    pub fn fraction(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

/// Smallest count `c` with `c / total >= min_support`, evaluated in the
/// same floating point expression as [`Support::fraction`], so a count
/// passes the integer threshold exactly when its fraction passes the
/// fractional one.
pub fn min_support_count(min_support: f64, total: usize) -> Result<usize> {
    check_fraction("min_support", min_support, false)?;
    if total == 0 {
        return Err(Error::EmptyDatabase);
    }
    let m = total as f64;
    let approx = min_support * m;
    let mut c = approx as usize;
    if (c as f64) < approx {
        c += 1;
    }
    let c = c.min(total);
    let passes = |c: usize| c as f64 / m >= min_support;
    let mut c = c;
    while c > 1 && passes(c - 1) {
        c -= 1;
    }
    while c < total && !passes(c) {
        c += 1;
    }
    Ok(c)
}

/// Validates a fraction in `(0, 1]`, or `[0, 1]` when `allow_zero`.
pub(crate) fn check_fraction(name: &'static str, value: f64, allow_zero: bool) -> Result<()> {
    let low_ok = if allow_zero {
        value >= 0.0
    } else {
        value > 0.0
    };
    if low_ok && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold { name, value })
    }
}

/// Fraction of transactions containing `x`. The empty itemset has
/// support 1 on any nonempty database.
pub fn support(x: &Itemset, db: &TransactionDb) -> Result<f64> {
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    Ok(Support::new(db.support_count(x)?, db.len()).fraction())
}

/// `X ⇒ Y` with disjoint, nonempty sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssociationRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
}

impl AssociationRule {
    pub fn new(antecedent: Itemset, consequent: Itemset) -> Result<Self> {
        if antecedent.is_empty() || consequent.is_empty() {
            return Err(Error::InvalidRule(
                "antecedent and consequent must be nonempty",
            ));
        }
        if !antecedent.is_disjoint(&consequent) {
            return Err(Error::InvalidRule("antecedent and consequent overlap"));
        }
        Ok(AssociationRule {
            antecedent,
            consequent,
        })
    }

    pub fn items(&self) -> Itemset {
        self.antecedent.union(&self.consequent)
    }
}

/// Metric values plus the counts they were computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleMetrics {
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
    /// Transactions containing antecedent ∪ consequent.
    pub joint_count: usize,
    pub antecedent_count: usize,
    pub consequent_count: usize,
    pub total: usize,
}

impl RuleMetrics {
    pub fn from_counts(
        joint: usize,
        antecedent: usize,
        consequent: usize,
        total: usize,
    ) -> Result<Self> {
        if total == 0 {
            return Err(Error::EmptyDatabase);
        }
        if antecedent == 0 || consequent == 0 {
            return Err(Error::ZeroMarginalSupport);
        }
        Ok(RuleMetrics {
            support: Support::new(joint, total).fraction(),
            confidence: joint as f64 / antecedent as f64,
            lift: (joint as f64 * total as f64) / (antecedent as f64 * consequent as f64),
            joint_count: joint,
            antecedent_count: antecedent,
            consequent_count: consequent,
            total,
        })
    }

    /// Orders by lift descending, then confidence descending, compared as
    /// exact rationals.
    pub fn cmp_strength(&self, other: &RuleMetrics) -> Ordering {
        let lift_l = self.joint_count as u128
            * other.antecedent_count as u128
            * other.consequent_count as u128
            * self.total as u128;
        let lift_r = other.joint_count as u128
            * self.antecedent_count as u128
            * self.consequent_count as u128
            * other.total as u128;
        let conf_l = self.joint_count as u128 * other.antecedent_count as u128;
        let conf_r = other.joint_count as u128 * self.antecedent_count as u128;
        lift_r.cmp(&lift_l).then(conf_r.cmp(&conf_l))
    }
}

pub fn confidence(rule: &AssociationRule, db: &TransactionDb) -> Result<f64> {
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let ante = db.support_count(&rule.antecedent)?;
    if ante == 0 {
        return Err(Error::ZeroAntecedentSupport);
    }
    let joint = db.support_count(&rule.items())?;
    Ok(joint as f64 / ante as f64)
}

pub fn lift(rule: &AssociationRule, db: &TransactionDb) -> Result<f64> {
    Ok(evaluate(rule, db)?.lift)
}

/// All three metrics of one rule.
pub fn evaluate(rule: &AssociationRule, db: &TransactionDb) -> Result<RuleMetrics> {
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    RuleMetrics::from_counts(
        db.support_count(&rule.items())?,
        db.support_count(&rule.antecedent)?,
        db.support_count(&rule.consequent)?,
        db.len(),
    )
}

/// Every nonempty proper subset of `set` in rule order: size ascending,
/// then canonical item order.
pub(crate) fn proper_subsets(set: &Itemset) -> Result<Vec<Itemset>> {
    let n = set.len();
    if n > 24 {
        return Err(Error::ItemsetTooLarge(n));
    }
    let items = set.items();
    let mut subsets: Vec<Itemset> = (1u32..(1 << n) - 1)
        .map(|mask| {
            Itemset::from_sorted(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| items[i])
                    .collect(),
            )
        })
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(subsets)
}

/// Splits `frequent` into every `X ⇒ frequent \ X` and keeps the rules
/// whose confidence reaches `min_conf`. `count_of` supplies the support
/// count of the subsets.
pub(crate) fn expand_rules<F>(
    frequent: &Itemset,
    joint: usize,
    total: usize,
    min_conf: f64,
    mut count_of: F,
) -> Result<Vec<(AssociationRule, RuleMetrics)>>
where
    F: FnMut(&Itemset) -> Result<usize>,
{
    if frequent.len() < 2 {
        return Err(Error::ItemsetTooSmall(frequent.len()));
    }
    check_fraction("min_confidence", min_conf, true)?;
    let mut out = Vec::new();
    for antecedent in proper_subsets(frequent)? {
        let consequent = frequent.difference(&antecedent);
        let metrics =
            RuleMetrics::from_counts(joint, count_of(&antecedent)?, count_of(&consequent)?, total)?;
        if metrics.confidence >= min_conf {
            out.push((
                AssociationRule {
                    antecedent,
                    consequent,
                },
                metrics,
            ));
        }
    }
    Ok(out)
}

/// Rules derivable from one frequent itemset with confidence at least
/// `min_conf`, ordered by antecedent size then canonical item order.
pub fn rules_from_itemset(
    frequent: &Itemset,
    db: &TransactionDb,
    min_conf: f64,
) -> Result<Vec<(AssociationRule, RuleMetrics)>> {
    if frequent.len() < 2 {
        return Err(Error::ItemsetTooSmall(frequent.len()));
    }
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let joint = db.support_count(frequent)?;
    expand_rules(frequent, joint, db.len(), min_conf, |s| db.support_count(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> TransactionDb {
        TransactionDb::from_flags(&[&["a", "b"], &["a"], &["b", "c"]]).unwrap()
    }

    fn abab() -> TransactionDb {
        TransactionDb::from_flags(&[&["a", "b"], &["a", "b"], &["a"], &["b"]]).unwrap()
    }

    fn rule(db: &TransactionDb, x: &[&str], y: &[&str]) -> AssociationRule {
        AssociationRule::new(db.flags(x).unwrap(), db.flags(y).unwrap()).unwrap()
    }

    #[test]
    fn support_examples() {
        let db = abc();
        assert_eq!(support(&db.flags(&["a"]).unwrap(), &db).unwrap(), 2.0 / 3.0);
        assert_eq!(support(&Itemset::empty(), &db).unwrap(), 1.0);
        let universe =
            crate::ItemUniverse::new(["a", "b", "c", "z"].iter().map(|n| crate::Item::flag(*n)))
                .unwrap();
        let db = TransactionDb::from_itemsets(
            universe.clone(),
            db.record_ids().to_vec(),
            db.transactions().to_vec(),
        )
        .unwrap();
        let z = universe.itemset(&[crate::Item::flag("z")]).unwrap();
        assert_eq!(support(&z, &db).unwrap(), 0.0);
    }

    #[test]
    fn support_on_empty_db_is_an_error() {
        let db = TransactionDb::from_flags(&[]).unwrap();
        assert_eq!(support(&Itemset::empty(), &db), Err(Error::EmptyDatabase));
    }

    #[test]
    fn confidence_examples() {
        let db = abab();
        assert_eq!(
            confidence(&rule(&db, &["a"], &["b"]), &db).unwrap(),
            2.0 / 3.0
        );
        let perfect = TransactionDb::from_flags(&[&["a", "b"], &["a", "b"], &["b"]]).unwrap();
        assert_eq!(
            confidence(&rule(&perfect, &["a"], &["b"]), &perfect).unwrap(),
            1.0
        );
        let never = TransactionDb::from_flags(&[&["a"], &["b"]]).unwrap();
        assert_eq!(
            confidence(&rule(&never, &["a"], &["b"]), &never).unwrap(),
            0.0
        );
    }

    #[test]
    fn confidence_zero_antecedent() {
        let universe =
            crate::ItemUniverse::new(["a", "b"].iter().map(|n| crate::Item::flag(*n))).unwrap();
        let db = TransactionDb::with_universe(
            universe,
            alloc::vec!["t0".into()],
            alloc::vec![alloc::vec![crate::Item::flag("b")]],
        )
        .unwrap();
        let r = rule(&db, &["a"], &["b"]);
        assert_eq!(confidence(&r, &db), Err(Error::ZeroAntecedentSupport));
        assert_eq!(lift(&r, &db), Err(Error::ZeroMarginalSupport));
    }

    #[test]
    fn lift_examples() {
        let db = abab();
        assert_eq!(lift(&rule(&db, &["a"], &["b"]), &db).unwrap(), 8.0 / 9.0);
        let full = TransactionDb::from_flags(&[&["a", "b"][..]; 4]).unwrap();
        assert_eq!(lift(&rule(&full, &["a"], &["b"]), &full).unwrap(), 1.0);
        let rare = TransactionDb::from_flags(&[&["a", "b"], &["c"], &["d"], &["e"]]).unwrap();
        let m = evaluate(&rule(&rare, &["a"], &["b"]), &rare).unwrap();
        assert_eq!(m.confidence, 1.0);
        assert_eq!(m.lift, 4.0);
        assert_eq!(m.support, 0.25);
    }

    #[test]
    fn rules_from_pair() {
        let db = abab();
        let ab = db.flags(&["a", "b"]).unwrap();
        let rules = rules_from_itemset(&ab, &db, 0.6).unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].0, rule(&db, &["a"], &["b"]));
        assert_eq!(rules[1].0, rule(&db, &["b"], &["a"]));
        for (_, m) in &rules {
            assert_eq!(m.confidence, 2.0 / 3.0);
            assert_eq!(m.support, 0.5);
        }
        assert!(rules_from_itemset(&ab, &db, 0.9).unwrap().is_empty());
        let a = db.flags(&["a"]).unwrap();
        assert_eq!(
            rules_from_itemset(&a, &db, 0.5),
            Err(Error::ItemsetTooSmall(1))
        );
    }

    #[test]
    fn rule_order_for_triple() {
        let db = TransactionDb::from_flags(&[&["a", "b", "c"][..]; 3]).unwrap();
        let abc = db.flags(&["a", "b", "c"]).unwrap();
        let rules = rules_from_itemset(&abc, &db, 0.0).unwrap();
        let ante: Vec<_> = rules
            .iter()
            .map(|(r, _)| db.universe().render(&r.antecedent))
            .collect();
        assert_eq!(
            ante,
            ["a=1", "b=1", "c=1", "a=1 & b=1", "a=1 & c=1", "b=1 & c=1"]
        );
    }

    #[test]
    fn invalid_rules() {
        let db = abab();
        let a = db.flags(&["a"]).unwrap();
        assert!(AssociationRule::new(a.clone(), a.clone()).is_err());
        assert!(AssociationRule::new(a, Itemset::empty()).is_err());
    }

    #[test]
    fn min_count_matches_fraction_comparison() {
        for total in 1..200usize {
            for s in [0.1, 0.2, 0.3, 1.0 / 3.0, 0.5, 0.6, 0.7, 0.9, 1.0, 1e-9] {
                let c = min_support_count(s, total).unwrap();
                assert!(c as f64 / total as f64 >= s);
                assert!(c == 1 || ((c - 1) as f64 / total as f64) < s);
            }
        }
        assert!(min_support_count(0.0, 10).is_err());
        assert!(min_support_count(1.5, 10).is_err());
        assert!(min_support_count(f64::NAN, 10).is_err());
        assert_eq!(min_support_count(0.5, 0), Err(Error::EmptyDatabase));
    }

    #[test]
    fn strength_order_is_exact() {
        let a = RuleMetrics::from_counts(2, 3, 3, 4).unwrap();
        let b = RuleMetrics::from_counts(1, 1, 1, 4).unwrap();
        assert_eq!(a.cmp_strength(&b), Ordering::Greater);
        assert_eq!(b.cmp_strength(&a), Ordering::Less);
        assert_eq!(a.cmp_strength(&a), Ordering::Equal);
    }
}
