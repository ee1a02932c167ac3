//! The pivot-rule framework shared by all three engines.
//!
//! A rule is an information function (a tuple of neighbor rankings) plus a
//! decision function with bounded memory. Engines hand the decision function
//! nothing but tier positions, the improving count, the total element count
//! and the memory state: raw element ids are withheld structurally, so any
//! two states whose improving sets are related by a ranking-preserving
//! bijection produce identical decisions.
//!
//! Elements are identified by their Bland number (the fixed global index of
//! a player-0 edge, action, or LP variable). Inside a decision, element `i`
//! is addressed by its position `1..=k` in the Bland-ascending ordering of
//! the current improving set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global index of a rankable element (player-0 edge, action, variable).
pub type BlandId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("ranking {0} is not available on this engine")]
    UnsupportedRanking(String),
    #[error("pivot rule contract violated: {0}")]
    Contract(String),
    #[error("index selector returned rank {rank} with only {k} improving elements")]
    SelectorRange { rank: u64, k: u64 },
    #[error("replay selector covers {len} steps; memory bound is {bound}")]
    ReplayTooLong { len: usize, bound: usize },
}

/// A total preorder on the current improving set, stored as tiers with the
/// least-preferred tier first. Elements outside the improving set do not
/// appear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotalPreorder {
    tiers: Vec<Vec<BlandId>>,
}

impl TotalPreorder {
    /// Builds a preorder from scored elements: ascending score, ties share a
    /// tier, least-preferred (smallest score) first. Ids inside a tier are
    /// kept sorted.
    pub fn from_scores<S: Ord>(mut items: Vec<(BlandId, S)>) -> Self {
        items.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut tiers: Vec<Vec<BlandId>> = Vec::new();
        let mut iter = items.into_iter();
        if let Some((id, score)) = iter.next() {
            let mut cur_score = score;
            let mut cur = vec![id];
            for (id, score) in iter {
                if score == cur_score {
                    cur.push(id);
                } else {
                    tiers.push(std::mem::take(&mut cur));
                    cur.push(id);
                    cur_score = score;
                }
            }
            tiers.push(cur);
        }
        Self { tiers }
    }

    /// The Bland ranking itself: strict order, smallest id most preferred
    /// (so the largest id sits in the first, least-preferred tier).
    pub fn bland(improving_sorted: &[BlandId]) -> Self {
        Self {
            tiers: improving_sorted.iter().rev().map(|&i| vec![i]).collect(),
        }
    }

    pub fn tiers(&self) -> &[Vec<BlandId>] {
        &self.tiers
    }

    pub fn element_count(&self) -> usize {
        self.tiers.iter().map(|t| t.len()).sum()
    }

    /// Most-preferred tier (empty slice if the preorder is empty).
    pub fn top_tier(&self) -> &[BlandId] {
        self.tiers.last().map(|t| t.as_slice()).unwrap_or(&[])
    }

    /// Elements enumerated from least preferred to most preferred, ties
    /// within a tier broken by ascending id.
    pub fn flatten_ascending(&self) -> Vec<BlandId> {
        self.tiers.iter().flatten().copied().collect()
    }

    /// Rewrites ids into positions within `improving_sorted` (1-based).
    fn to_positions(&self, improving_sorted: &[BlandId]) -> Vec<Vec<usize>> {
        let index: BTreeMap<BlandId, usize> = improving_sorted
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i + 1))
            .collect();
        self.tiers
            .iter()
            .map(|tier| tier.iter().map(|id| index[id]).collect())
            .collect()
    }
}

/// True iff all preorders have identical tier lists.
pub fn rankings_agree(preorders: &[TotalPreorder]) -> bool {
    assert!(!preorders.is_empty(), "need at least one preorder");
    preorders.windows(2).all(|w| w[0].tiers == w[1].tiers)
}

/// The neighbor rankings an engine can be asked for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RankingKind {
    /// Orders by global index; smallest index most preferred.
    Bland,
    /// Orders by exact reduced cost; largest most preferred.
    Dantzig,
    /// Orders by exact objective value after applying the switch.
    LargestIncrease,
    /// Orders by objective increase per exact edge length (compared on
    /// squared ratios to stay rational). LP only.
    SteepestEdge,
    /// Orders by the ratio of shadow objective change to objective
    /// increase, for a shadow vector fixed beforehand. LP only.
    ShadowVertex { d: Vec<String> },
}

impl RankingKind {
    pub fn name(&self) -> &'static str {
        match self {
            RankingKind::Bland => "bland",
            RankingKind::Dantzig => "dantzig",
            RankingKind::LargestIncrease => "largest-increase",
            RankingKind::SteepestEdge => "steepest-edge",
            RankingKind::ShadowVertex { .. } => "shadow-vertex",
        }
    }
}

/// What an engine exposes to a rule at one iteration.
pub trait RankingScope {
    /// Total number of rankable elements (player-0 edges / actions /
    /// variables), the `n` handed to index selectors.
    fn element_count(&self) -> u64;
    /// Current improving set, sorted by Bland id ascending. Never empty
    /// when a rule is consulted.
    fn improving(&self) -> &[BlandId];
    /// The requested neighbor ranking on the improving set.
    fn ranking(&self, kind: &RankingKind) -> Result<TotalPreorder, RuleError>;
}

/// An index-selector function: `(improving count, element count, memory) ->
/// (rank, next memory)` with rank counted from the smallest Bland id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "selector", rename_all = "kebab-case")]
pub enum IndexSelector {
    /// Always the same rank (clamped to the improving count); one memory
    /// state.
    Constant { rank: u64 },
    /// Cycles through the given ranks (clamped); one memory state per
    /// entry.
    Cyclic { ranks: Vec<u64> },
    /// Explicit transition table. Entries are matched in order; `k`/`n` of
    /// `None` match anything. Without `clamp`, a matched rank larger than
    /// the improving count is a contract error.
    Table {
        transitions: Vec<SelectorTransition>,
        memory: u64,
        #[serde(default)]
        clamp: bool,
    },
    /// Replays a fixed rank sequence, one memory state per step; afterwards
    /// it falls back to rank 1.
    Replay { picks: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorTransition {
    pub k: Option<u64>,
    pub n: Option<u64>,
    pub h: u64,
    pub rank: u64,
    pub next: u64,
}

impl IndexSelector {
    pub fn memory_bound(&self) -> u64 {
        match self {
            IndexSelector::Constant { .. } => 1,
            IndexSelector::Cyclic { ranks } => ranks.len().max(1) as u64,
            IndexSelector::Table { memory, .. } => (*memory).max(1),
            IndexSelector::Replay { picks } => picks.len() as u64 + 1,
        }
    }

    /// Evaluates the selector. `k` is the improving count, `n` the element
    /// count, `h` the memory state (1-based).
    pub fn select(&self, k: u64, n: u64, h: u64) -> Result<(u64, u64), RuleError> {
        assert!(k >= 1, "selector consulted with an empty improving set");
        match self {
            IndexSelector::Constant { rank } => Ok(((*rank).clamp(1, k), 1)),
            IndexSelector::Cyclic { ranks } => {
                let len = ranks.len().max(1);
                let idx = (h as usize - 1) % len;
                let rank = ranks.get(idx).copied().unwrap_or(1).clamp(1, k);
                Ok((rank, ((idx + 1) % len) as u64 + 1))
            }
            IndexSelector::Table {
                transitions,
                memory,
                clamp,
            } => {
                let hit = transitions
                    .iter()
                    .find(|t| t.h == h && t.k.map_or(true, |v| v == k) && t.n.map_or(true, |v| v == n));
                let Some(t) = hit else {
                    return Err(RuleError::Contract(format!(
                        "no selector transition matches (k={k}, n={n}, h={h})"
                    )));
                };
                let rank = if *clamp { t.rank.clamp(1, k) } else { t.rank };
                if rank > k {
                    return Err(RuleError::SelectorRange { rank, k });
                }
                if t.next < 1 || t.next > (*memory).max(1) {
                    return Err(RuleError::Contract(format!(
                        "selector transition leaves the memory range: h'={}",
                        t.next
                    )));
                }
                Ok((rank, t.next))
            }
            IndexSelector::Replay { picks } => {
                let step = h as usize - 1;
                match picks.get(step) {
                    Some(&rank) => {
                        if rank > k {
                            return Err(RuleError::SelectorRange { rank, k });
                        }
                        Ok((rank, h + 1))
                    }
                    None => Ok((1, h)),
                }
            }
        }
    }
}

/// A rank-picker `f`: improving count -> rank in `1..=k`, counted from the
/// least-preferred end of the common ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "kebab-case")]
pub enum RankPicker {
    /// `f(k) = 1`: always the least-preferred improving element.
    One,
    /// `f(k) = k`: always the most-preferred improving element.
    K,
    /// `f(k) = ceil(sqrt(k))`.
    SqrtCeil,
    /// Table lookup with a fallback picker for missing keys.
    Table {
        table: BTreeMap<u64, u64>,
        default: Box<RankPicker>,
    },
}

impl RankPicker {
    pub fn pick(&self, k: u64) -> u64 {
        let raw = match self {
            RankPicker::One => 1,
            RankPicker::K => k,
            RankPicker::SqrtCeil => {
                let mut r = (k as f64).sqrt() as u64;
                while r * r < k {
                    r += 1;
                }
                while r > 1 && (r - 1) * (r - 1) >= k {
                    r -= 1;
                }
                r
            }
            RankPicker::Table { table, default } => {
                table.get(&k).copied().unwrap_or_else(|| default.pick(k))
            }
        };
        raw.clamp(1, k)
    }
}

/// A deterministic pivot rule: greedy on one ranking, an index-based rule
/// driven by a selector, or an `f`-rule over the (Bland, Dantzig,
/// LargestIncrease) tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PivotRule {
    Greedy { ranking: RankingKind },
    IndexSelector { selector: IndexSelector },
    F { picker: RankPicker },
}

/// One decision of a pivot rule.
#[derive(Debug, Clone)]
pub struct Decision {
    pub chosen: BlandId,
    /// Position of the chosen element in the Bland-ascending improving
    /// list, 1-based.
    pub chosen_rank: usize,
    pub next_memory: u64,
    /// Set when an f-rule found the rankings in disagreement and fell back
    /// to the Bland order.
    pub diverged: bool,
    /// The preorders consulted this step, in ranking order.
    pub tiers: Vec<TotalPreorder>,
}

impl PivotRule {
    pub fn greedy(ranking: RankingKind) -> Self {
        PivotRule::Greedy { ranking }
    }

    pub fn index_based(selector: IndexSelector) -> Self {
        PivotRule::IndexSelector { selector }
    }

    pub fn f_rule(picker: RankPicker) -> Self {
        PivotRule::F { picker }
    }

    /// The rankings this rule consumes, i.e. its information function.
    pub fn rankings(&self) -> Vec<RankingKind> {
        match self {
            PivotRule::Greedy { ranking } => vec![ranking.clone()],
            PivotRule::IndexSelector { .. } => vec![RankingKind::Bland],
            PivotRule::F { .. } => vec![
                RankingKind::Bland,
                RankingKind::Dantzig,
                RankingKind::LargestIncrease,
            ],
        }
    }

    pub fn memory_bound(&self) -> u64 {
        match self {
            PivotRule::Greedy { .. } | PivotRule::F { .. } => 1,
            PivotRule::IndexSelector { selector } => selector.memory_bound(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PivotRule::Greedy { ranking } => format!("greedy-{}", ranking.name()),
            PivotRule::IndexSelector { selector } => match selector {
                IndexSelector::Constant { rank } => format!("index-const-{rank}"),
                IndexSelector::Cyclic { ranks } => format!(
                    "index-cyclic-{}",
                    ranks
                        .iter()
                        .map(|r| r.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                IndexSelector::Table { .. } => "index-table".to_string(),
                IndexSelector::Replay { .. } => "index-replay".to_string(),
            },
            PivotRule::F { picker } => match picker {
                RankPicker::One => "f-one".to_string(),
                RankPicker::K => "f-k".to_string(),
                RankPicker::SqrtCeil => "f-sqrt-ceil".to_string(),
                RankPicker::Table { .. } => "f-table".to_string(),
            },
        }
    }

    /// Makes one decision. The engine must pass a scope with a nonempty
    /// improving set and the rule's current memory state.
    pub fn choose(&self, scope: &dyn RankingScope, memory: u64) -> Result<Decision, RuleError> {
        let improving = scope.improving();
        assert!(!improving.is_empty(), "rule consulted without improving elements");
        let k = improving.len();

        let kinds = self.rankings();
        let mut preorders = Vec::with_capacity(kinds.len());
        for kind in &kinds {
            let pre = scope.ranking(kind)?;
            if pre.element_count() != k {
                return Err(RuleError::Contract(format!(
                    "{} ranking does not cover the improving set",
                    kind.name()
                )));
            }
            preorders.push(pre);
        }
        // From here on the decision only sees positions, never raw ids.
        let position_tiers: Vec<Vec<Vec<usize>>> = preorders
            .iter()
            .map(|p| p.to_positions(improving))
            .collect();

        let (position, next_memory, diverged) = match self {
            PivotRule::Greedy { .. } => {
                let top = position_tiers[0].last().expect("nonempty preorder");
                (*top.iter().min().expect("nonempty tier"), 1, false)
            }
            PivotRule::IndexSelector { selector } => {
                let (rank, next) = selector.select(k as u64, scope.element_count(), memory)?;
                (rank as usize, next, false)
            }
            PivotRule::F { picker } => {
                let f = picker.pick(k as u64) as usize;
                let agree = position_tiers.windows(2).all(|w| w[0] == w[1]);
                // Under agreement the Bland tier list IS the common order;
                // on disagreement we fall back to it and flag the step.
                let order: Vec<usize> = position_tiers[0].iter().flatten().copied().collect();
                (order[f - 1], 1, !agree)
            }
        };
        if position < 1 || position > k {
            return Err(RuleError::Contract(format!(
                "decision produced position {position} outside 1..={k}"
            )));
        }
        Ok(Decision {
            chosen: improving[position - 1],
            chosen_rank: position,
            next_memory,
            diverged,
            tiers: preorders,
        })
    }
}

/// Builds a replay selector that reproduces a finished run's Bland-rank
/// choices, one memory state per step. Errors if a memory cap is given and
/// the trace needs more states.
pub fn index_rule_from_trace(
    chosen_ranks: &[u64],
    memory_cap: Option<u64>,
) -> Result<IndexSelector, RuleError> {
    let needed = chosen_ranks.len() + 1;
    if let Some(cap) = memory_cap {
        if needed as u64 > cap {
            return Err(RuleError::ReplayTooLong {
                len: chosen_ranks.len(),
                bound: cap as usize,
            });
        }
    }
    Ok(IndexSelector::Replay {
        picks: chosen_ranks.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bland_preorder_example() {
        // indices {3,7,9} -> tiers [{9},{7},{3}], least-preferred first
        let pre = TotalPreorder::bland(&[3, 7, 9]);
        assert_eq!(pre.tiers(), &[vec![9], vec![7], vec![3]]);
        let pre = TotalPreorder::bland(&[5]);
        assert_eq!(pre.tiers(), &[vec![5]]);
    }

    #[test]
    fn from_scores_groups_ties() {
        let pre = TotalPreorder::from_scores(vec![(1, 5), (2, 2), (3, 5)]);
        assert_eq!(pre.tiers(), &[vec![2], vec![1, 3]]);
    }

    #[test]
    fn agreement() {
        let a = TotalPreorder::bland(&[1, 2]);
        let b = TotalPreorder::bland(&[1, 2]);
        assert!(rankings_agree(&[a.clone(), b]));
        let c = TotalPreorder::from_scores(vec![(1, 0), (2, 1)]);
        // c prefers 2, bland prefers 1 -> tier lists differ
        assert!(!rankings_agree(&[a, c]));
    }

    #[test]
    fn sqrt_ceil_picker() {
        let f = RankPicker::SqrtCeil;
        assert_eq!(f.pick(1), 1);
        assert_eq!(f.pick(2), 2);
        assert_eq!(f.pick(4), 2);
        assert_eq!(f.pick(5), 3);
        assert_eq!(f.pick(9), 3);
        assert_eq!(f.pick(10), 4);
    }

    #[test]
    fn cyclic_selector_alternates() {
        let s = IndexSelector::Cyclic { ranks: vec![1, 2] };
        let (r1, h2) = s.select(5, 10, 1).unwrap();
        assert_eq!(r1, 1);
        let (r2, h3) = s.select(5, 10, h2).unwrap();
        assert_eq!(r2, 2);
        assert_eq!(h3, 1);
    }

    #[test]
    fn table_selector_range_error() {
        let s = IndexSelector::Table {
            transitions: vec![SelectorTransition {
                k: None,
                n: None,
                h: 1,
                rank: 9,
                next: 1,
            }],
            memory: 1,
            clamp: false,
        };
        assert!(matches!(
            s.select(3, 10, 1),
            Err(RuleError::SelectorRange { rank: 9, k: 3 })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_picker() -> impl Strategy<Value = RankPicker> {
            prop_oneof![
                Just(RankPicker::One),
                Just(RankPicker::K),
                Just(RankPicker::SqrtCeil),
                (
                    proptest::collection::btree_map(1u64..100, 1u64..200, 0..6),
                    prop_oneof![Just(RankPicker::One), Just(RankPicker::K)],
                )
                    .prop_map(|(table, d)| RankPicker::Table {
                        table,
                        default: Box::new(d),
                    }),
            ]
        }

        proptest! {
            // any picker stays within 1..=k, whatever its table says
            #[test]
            fn pickers_stay_in_range(f in arb_picker(), k in 1u64..100) {
                let r = f.pick(k);
                prop_assert!(r >= 1 && r <= k);
            }

            // selectors always return a valid rank and memory state
            #[test]
            fn stock_selectors_stay_in_range(
                rank in 1u64..12,
                ranks in proptest::collection::vec(1u64..12, 1..5),
                k in 1u64..10,
                h in 1u64..6,
            ) {
                for sel in [IndexSelector::Constant { rank }, IndexSelector::Cyclic { ranks }] {
                    let h = ((h - 1) % sel.memory_bound()) + 1;
                    let (r, h2) = sel.select(k, 30, h).unwrap();
                    prop_assert!(r >= 1 && r <= k);
                    prop_assert!(h2 >= 1 && h2 <= sel.memory_bound());
                }
            }
        }
    }

    #[test]
    fn replay_from_trace() {
        let sel = index_rule_from_trace(&[1, 2, 1], None).unwrap();
        assert_eq!(sel.select(4, 9, 1).unwrap(), (1, 2));
        assert_eq!(sel.select(4, 9, 2).unwrap(), (2, 3));
        assert_eq!(sel.select(4, 9, 3).unwrap(), (1, 4));
        // after the trace: rank 1, memory parked
        assert_eq!(sel.select(4, 9, 4).unwrap(), (1, 4));
        // empty trace is the trivial selector
        let sel = index_rule_from_trace(&[], None).unwrap();
        assert_eq!(sel.select(2, 5, 1).unwrap(), (1, 1));
        // memory cap enforced
        assert!(index_rule_from_trace(&[1, 1, 1], Some(2)).is_err());
    }
}
