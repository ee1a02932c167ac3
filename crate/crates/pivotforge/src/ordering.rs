//! Priorities and the signed-power order on priority multisets.
//!
//! A valuation of a parity-game vertex is the multiset of priorities seen
//! on the play path to the sink. Two multisets are compared by evaluating
//! `sum over p of (-t)^p` exactly (multiplicity counted) for the game's
//! base `t` and comparing the resulting big integers. Large even priorities
//! are good, large odd priorities are bad.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

/// A vertex priority: a plain integer, or the bottom element used only by
/// the sink. Bottom compares below every integer and contributes 0 to any
/// valuation sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Priority {
    Bottom,
    Value(i64),
}

impl Priority {
    pub fn value(self) -> Option<i64> {
        match self {
            Priority::Bottom => None,
            Priority::Value(v) => Some(v),
        }
    }

    pub fn is_bottom(self) -> bool {
        matches!(self, Priority::Bottom)
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Priority::Bottom => write!(f, "-inf"),
            Priority::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Multiset of integer priorities. The bottom priority is never stored; it
/// evaluates to 0 and inserting it leaves the multiset unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct ValuationMultiset {
    counts: BTreeMap<i64, u64>,
}

impl ValuationMultiset {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_priorities(ps: &[i64]) -> Self {
        let mut s = Self::empty();
        for &p in ps {
            s = multiset_insert(&s, Priority::Value(p));
        }
        s
    }

    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total multiplicity.
    pub fn len(&self) -> u64 {
        self.counts.values().sum()
    }
}

impl fmt::Display for ValuationMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for (p, c) in &self.counts {
            for _ in 0..*c {
                if !first {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
                first = false;
            }
        }
        write!(f, "}}")
    }
}

/// `(-t)^p` as an exact big integer, `p >= 0`.
pub fn signed_power(t: u64, p: i64) -> BigInt {
    assert!(p >= 0, "negative priorities are not supported (got {p})");
    let base = BigInt::from(t);
    let mut acc = BigInt::from(1);
    for _ in 0..p {
        acc *= &base;
    }
    if p % 2 == 1 {
        -acc
    } else {
        acc
    }
}

/// Evaluates the multiset under base `t`: the exact signed sum
/// `sum (-t)^p` with multiplicity. The empty multiset evaluates to 0.
pub fn eval_multiset(s: &ValuationMultiset, t: u64) -> BigInt {
    assert!(t >= 1, "base must be at least 1");
    let mut acc = BigInt::zero();
    for (&p, &c) in &s.counts {
        acc += signed_power(t, p) * BigInt::from(c);
    }
    acc
}

/// Orders two multisets by their exact evaluations under base `t`.
pub fn compare_valuations(s1: &ValuationMultiset, s2: &ValuationMultiset, t: u64) -> Ordering {
    eval_multiset(s1, t).cmp(&eval_multiset(s2, t))
}

/// Returns a copy of `s` with `p` added once; inserting bottom is a no-op.
pub fn multiset_insert(s: &ValuationMultiset, p: Priority) -> ValuationMultiset {
    match p {
        Priority::Bottom => s.clone(),
        Priority::Value(v) => {
            let mut out = s.clone();
            *out.counts.entry(v).or_insert(0) += 1;
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(ps: &[i64]) -> ValuationMultiset {
        ValuationMultiset::from_priorities(ps)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_multiset(&ms(&[]), 4), BigInt::from(0));
        assert_eq!(eval_multiset(&ms(&[3]), 4), BigInt::from(-64));
        assert_eq!(eval_multiset(&ms(&[3, 6]), 4), BigInt::from(4032));
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare_valuations(&ms(&[3]), &ms(&[4]), 4), Ordering::Less);
        assert_eq!(
            compare_valuations(&ms(&[3, 6]), &ms(&[4]), 4),
            Ordering::Greater
        );
        assert_eq!(
            compare_valuations(&ms(&[5]), &ms(&[5]), 9),
            Ordering::Equal
        );
    }

    #[test]
    fn insert_examples() {
        assert_eq!(multiset_insert(&ms(&[]), Priority::Value(3)), ms(&[3]));
        assert_eq!(multiset_insert(&ms(&[3]), Priority::Value(3)), ms(&[3, 3]));
        assert_eq!(multiset_insert(&ms(&[4]), Priority::Bottom), ms(&[4]));
    }

    #[test]
    fn multiplicity_counts_in_eval() {
        // {3,3} under t=2: 2 * (-8) = -16
        assert_eq!(eval_multiset(&ms(&[3, 3]), 2), BigInt::from(-16));
    }

    fn arb_multiset() -> impl Strategy<Value = ValuationMultiset> {
        proptest::collection::vec(0i64..10, 0..8).prop_map(|v| ValuationMultiset::from_priorities(&v))
    }

    proptest! {
        // eval(insert(s, p), t) == eval(s, t) + (-t)^p
        #[test]
        fn insert_eval_identity(s in arb_multiset(), p in 0i64..10, t in 1u64..6) {
            let lhs = eval_multiset(&multiset_insert(&s, Priority::Value(p)), t);
            let rhs = eval_multiset(&s, t) + signed_power(t, p);
            prop_assert_eq!(lhs, rhs);
        }

        // compare_valuations agrees with direct comparison of evaluations,
        // computed along both paths
        #[test]
        fn compare_agrees_with_eval(s1 in arb_multiset(), s2 in arb_multiset(), t in 1u64..6) {
            let direct = eval_multiset(&s1, t).cmp(&eval_multiset(&s2, t));
            prop_assert_eq!(compare_valuations(&s1, &s2, t), direct);
        }

        // antisymmetry at the evaluation level, and totality
        #[test]
        fn order_is_total_and_antisymmetric(s1 in arb_multiset(), s2 in arb_multiset(), t in 1u64..6) {
            let ab = compare_valuations(&s1, &s2, t);
            let ba = compare_valuations(&s2, &s1, t);
            prop_assert_eq!(ab, ba.reverse());
        }
    }
}
