//! The rule framework's cross-engine promises: greedy/index equivalences,
//! structural symmetry of decisions, ranking agreement behavior, and the
//! geometric LP rankings against independently computed orders.

mod common;

use common::*;
use num_traits::Signed;
use pivotforge::gen::mdp_families::gen_mdp_counter;
use pivotforge::gen::parity_counter::counter_game_with_strategy;
use pivotforge::mdp::{consult_rule as mdp_consult, policy_iteration, policy_values};
use pivotforge::num::{rat_int, rat_to_string, Rational};
use pivotforge::parity::strategy_improvement;
use pivotforge::rules::{
    index_rule_from_trace, rankings_agree, BlandId, IndexSelector, PivotRule, RankPicker,
    RankingKind, RankingScope, RuleError, TotalPreorder,
};
use pivotforge::simplex::{consult_rule as lp_consult, simplex, Basis, LinearProgram};
use pivotforge::trace::TraceOptions;

#[test]
fn greedy_bland_equals_constant_selector_on_random_games() {
    let greedy = PivotRule::greedy(RankingKind::Bland);
    let constant = PivotRule::index_based(IndexSelector::Constant { rank: 1 });
    let mut r = rng(42);
    for trial in 0..50 {
        let g = random_layered_game(&mut r, 3, 2);
        let s0 = some_strategy(&g);
        let (a, _) = strategy_improvement(&g, &s0, &greedy, &TraceOptions::default()).unwrap();
        let (b, _) = strategy_improvement(&g, &s0, &constant, &TraceOptions::default()).unwrap();
        assert_eq!(
            a.rows.iter().map(|r| r.chosen).collect::<Vec<_>>(),
            b.rows.iter().map(|r| r.chosen).collect::<Vec<_>>(),
            "trial {trial}"
        );
    }
}

#[test]
fn constant_selector_reproduces_counter_walk() {
    // the always-first selector is the smallest-index rule
    let (g, s0) = counter_game_with_strategy(3);
    let rule = PivotRule::index_based(IndexSelector::Constant { rank: 1 });
    let (trace, _) = strategy_improvement(&g, &s0, &rule, &TraceOptions::default()).unwrap();
    assert_eq!(trace.iterations, 7);
}

/// Mock scope handing the decision two structurally identical situations
/// under different raw ids.
struct MockScope {
    improving: Vec<BlandId>,
    n: u64,
}

impl RankingScope for MockScope {
    fn element_count(&self) -> u64 {
        self.n
    }
    fn improving(&self) -> &[BlandId] {
        &self.improving
    }
    fn ranking(&self, kind: &RankingKind) -> Result<TotalPreorder, RuleError> {
        match kind {
            RankingKind::Bland => Ok(TotalPreorder::bland(&self.improving)),
            _ => Err(RuleError::UnsupportedRanking(kind.name().to_string())),
        }
    }
}

#[test]
fn decisions_are_symmetric_under_ranking_preserving_bijections() {
    // same tier structure, counts and memory; completely different ids
    let s1 = MockScope {
        improving: vec![2, 5, 9],
        n: 20,
    };
    let s2 = MockScope {
        improving: vec![101, 140, 177],
        n: 20,
    };
    for rule in [
        PivotRule::greedy(RankingKind::Bland),
        PivotRule::index_based(IndexSelector::Cyclic { ranks: vec![2, 1] }),
    ] {
        for memory in 1..=rule.memory_bound() {
            let d1 = rule.choose(&s1, memory).unwrap();
            let d2 = rule.choose(&s2, memory).unwrap();
            assert_eq!(d1.chosen_rank, d2.chosen_rank);
            assert_eq!(d1.next_memory, d2.next_memory);
            // the chosen elements correspond under the order bijection
            let i1 = s1.improving.iter().position(|&x| x == d1.chosen);
            let i2 = s2.improving.iter().position(|&x| x == d2.chosen);
            assert_eq!(i1, i2);
        }
    }
}

#[test]
fn relabeled_counter_produces_identical_rank_sequences() {
    // renaming vertices (hence rebuilding ids) leaves rank choices alone
    let (g, s0) = counter_game_with_strategy(3);
    let mut renamed = g.clone();
    for name in &mut renamed.names {
        *name = format!("x_{name}");
    }
    let rule = PivotRule::index_based(IndexSelector::Cyclic { ranks: vec![1, 2] });
    let (a, _) = strategy_improvement(&g, &s0, &rule, &TraceOptions::default()).unwrap();
    let (b, _) = strategy_improvement(&renamed, &s0, &rule, &TraceOptions::default()).unwrap();
    assert_eq!(a.chosen_ranks(), b.chosen_ranks());
}

#[test]
fn dantzig_and_largest_increase_on_the_counter() {
    let inst = gen_mdp_counter(2, Some(rat_int(0))).unwrap();
    let m = &inst.mdp;
    let vals = policy_values(m, &inst.initial).unwrap();
    // rc(be2 switch) = 4 beats rc(be1 switch) = 2
    let dantzig = PivotRule::greedy(RankingKind::Dantzig);
    let d = mdp_consult(m, &inst.initial, &vals, &dantzig, 1).unwrap();
    assert_eq!(m.actions[m.action_by_bland(d.chosen).unwrap()].name, "be2_a");
    // the same switch wins on objective-after
    let li = PivotRule::greedy(RankingKind::LargestIncrease);
    let d = mdp_consult(m, &inst.initial, &vals, &li, 1).unwrap();
    assert_eq!(m.actions[m.action_by_bland(d.chosen).unwrap()].name, "be2_a");
    // while the least-preferred pick under the reversed numbering is be1's
    let f1 = PivotRule::f_rule(RankPicker::One);
    let d = mdp_consult(m, &inst.initial, &vals, &f1, 1).unwrap();
    assert_eq!(m.actions[m.action_by_bland(d.chosen).unwrap()].name, "be1_a");
}

#[test]
fn f_rule_equals_greedy_when_rankings_agree() {
    // with the perturbation active the three rankings are strict and equal,
    // so the f(k)=k rule walks exactly like greedy on any one of them
    let inst = gen_mdp_counter(2, None).unwrap();
    let fk = PivotRule::f_rule(RankPicker::K);
    let greedy = PivotRule::greedy(RankingKind::Dantzig);
    let (a, _) = policy_iteration(&inst.mdp, &inst.initial, &fk, &TraceOptions::default()).unwrap();
    let (b, _) =
        policy_iteration(&inst.mdp, &inst.initial, &greedy, &TraceOptions::default()).unwrap();
    assert_eq!(
        a.rows.iter().map(|r| r.chosen).collect::<Vec<_>>(),
        b.rows.iter().map(|r| r.chosen).collect::<Vec<_>>()
    );
    assert!(a.rows.iter().all(|r| !r.diverged));
}

#[test]
fn f_rule_flags_divergence_and_falls_back_to_index_order() {
    // the unperturbed counter ties reduced costs across chain levels right
    // after a bit flip, so the tuple disagrees with the strict index order
    let inst = gen_mdp_counter(3, Some(rat_int(0))).unwrap();
    let f1 = PivotRule::f_rule(RankPicker::One);
    let (trace, _) =
        policy_iteration(&inst.mdp, &inst.initial, &f1, &TraceOptions::default()).unwrap();
    assert!(trace.rows.iter().any(|r| r.diverged));
    // the fallback still walks the counter
    assert!(trace.iterations >= 6);
}

#[test]
fn replay_selector_reproduces_counter_and_shortest_path() {
    let (g, s0) = counter_game_with_strategy(2);
    let bland = PivotRule::greedy(RankingKind::Bland);
    let (trace, _) = strategy_improvement(&g, &s0, &bland, &TraceOptions::default()).unwrap();
    assert_eq!(trace.iterations, 3);
    let sel = index_rule_from_trace(&trace.chosen_ranks(), None).unwrap();
    let (replay, _) =
        strategy_improvement(&g, &s0, &PivotRule::index_based(sel), &TraceOptions::default())
            .unwrap();
    assert_eq!(replay.rows.iter().map(|r| r.chosen).collect::<Vec<_>>(),
               trace.rows.iter().map(|r| r.chosen).collect::<Vec<_>>());

    // a shortest improving path found by breadth-first search over
    // strategies gives a linear-length replay selector
    let (g3, s03) = counter_game_with_strategy(3);
    let path = shortest_improving_path(&g3, &s03);
    assert!(path.len() <= 3, "path length {}", path.len());
    let sel = index_rule_from_trace(&path, None).unwrap();
    let (run, _) = strategy_improvement(
        &g3,
        &s03,
        &PivotRule::index_based(sel),
        &TraceOptions::default(),
    )
    .unwrap();
    assert_eq!(run.iterations as usize, path.len());
    assert!(run.reached_optimum());
}

/// Breadth-first search over strategies for the shortest sequence of
/// improving switches to the optimum; returns the Bland ranks picked.
fn shortest_improving_path(
    g: &pivotforge::parity::SinkParityGame,
    s0: &pivotforge::parity::Strategy,
) -> Vec<u64> {
    use std::collections::{BTreeMap, VecDeque};
    let key = |s: &pivotforge::parity::Strategy| -> Vec<usize> {
        s.choice.values().copied().collect()
    };
    let mut seen: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    seen.insert(key(s0), Vec::new());
    queue.push_back(s0.clone());
    while let Some(s) = queue.pop_front() {
        let vals = pivotforge::parity::valuations(g, &s).unwrap();
        let improving = pivotforge::parity::improving_switches(g, &s, &vals);
        let ranks = seen[&key(&s)].clone();
        if improving.is_empty() {
            return ranks;
        }
        for (pos, &b) in improving.iter().enumerate() {
            let e = g.edge_of_bland(b).unwrap();
            let next = pivotforge::parity::apply_switch(&s, e);
            if !seen.contains_key(&key(&next)) {
                let mut r = ranks.clone();
                r.push(pos as u64 + 1);
                seen.insert(key(&next), r);
                queue.push_back(next);
            }
        }
    }
    unreachable!("improvement always reaches the optimum");
}

#[test]
fn steepest_edge_squared_ratio_order() {
    // hand-checked: directions (1,0) and (3,4) under c = (1,0) have
    // squared ratios 1 and 9/25, so the first is preferred
    let gain1 = rat_int(1);
    let len1 = rat_int(1);
    let gain2 = rat_int(3);
    let len2 = rat_int(25);
    let score1 = &gain1 * &gain1 / len1;
    let score2 = &gain2 * &gain2 / len2;
    assert!(score1 > score2);
    let pre = TotalPreorder::from_scores(vec![(1, score1), (2, score2)]);
    assert_eq!(pre.top_tier(), &[1]);

    // and on an actual program: max x1 + x2 with generous slack on x2's
    // row, entering x1 moves along a shorter edge per unit of gain
    let lp = LinearProgram {
        a: vec![
            vec![rat_int(1), rat_int(0), rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(3), rat_int(0), rat_int(1)],
        ],
        b: vec![rat_int(1), rat_int(3)],
        c: vec![rat_int(1), rat_int(1), rat_int(0), rat_int(0)],
    };
    let basis = Basis::new(vec![2, 3]);
    let se = PivotRule::greedy(RankingKind::SteepestEdge);
    let d = lp_consult(&lp, &basis, &se, 1).unwrap();
    assert_eq!(d.chosen, 1, "x1's edge is steeper");
    let (trace, _) = simplex(&lp, &basis, &se, &TraceOptions::default()).unwrap();
    assert!(trace.reached_optimum());
}

#[test]
fn shadow_vertex_matches_direct_ratio_computation_on_random_lps() {
    let mut r = rng(99);
    let mut accepted = 0;
    let mut trials = 0;
    while accepted < 10 {
        trials += 1;
        assert!(trials < 2000);
        let Some((lp, basis)) = random_nondegenerate_lp(&mut r, 2, 4) else {
            continue;
        };
        let rc = pivotforge::simplex::reduced_costs(&lp, &basis).unwrap();
        let improving: Vec<usize> = rc
            .iter()
            .filter(|(_, r)| r.is_positive())
            .map(|(j, _)| *j)
            .collect();
        if improving.len() < 2 {
            continue;
        }
        let d: Vec<Rational> = lp.c.iter().map(|c| -c.clone()).collect();
        let d_strings: Vec<String> = d.iter().map(rat_to_string).collect();
        let rule = PivotRule::greedy(RankingKind::ShadowVertex { d: d_strings });
        let decision = match lp_consult(&lp, &basis, &rule, 1) {
            Ok(d) => d,
            Err(_) => continue, // an unbounded direction blocks the ranking
        };
        // independent route: cross-multiplied ratio comparison over the
        // actual neighbor steps
        let (x0, _) = pivotforge::simplex::bfs_from_basis(&lp, &basis).unwrap();
        let mut best: Option<(usize, Rational, Rational)> = None;
        let mut ok = true;
        for &j in &improving {
            let Ok(nb) = pivotforge::simplex::pivot(&lp, &basis, j) else {
                ok = false;
                break;
            };
            let (x1, _) = pivotforge::simplex::bfs_from_basis(&lp, &nb).unwrap();
            let up: Rational = lp
                .c
                .iter()
                .zip(x1.iter().zip(&x0))
                .map(|(c, (a, b))| c * &(a - b))
                .sum();
            let down: Rational = d
                .iter()
                .zip(x1.iter().zip(&x0))
                .map(|(dc, (a, b))| dc * &(a - b))
                .sum();
            let better = match &best {
                None => true,
                // down/up > best_down/best_up with positive denominators
                Some((_, bd, bu)) => &down * bu > bd * &up,
            };
            if better {
                best = Some((j, down, up));
            }
        }
        if !ok {
            continue;
        }
        let (bj, _, _) = best.unwrap();
        assert_eq!(decision.chosen as usize - 1, bj, "shadow preorders diverge");
        accepted += 1;
    }
}

#[test]
fn agreement_helper_and_scope_errors() {
    let a = TotalPreorder::bland(&[1, 2, 3]);
    let b = TotalPreorder::bland(&[1, 2, 3]);
    assert!(rankings_agree(&[a.clone(), b]));
    // parity games have no reduced costs to rank by
    let (g, s0) = counter_game_with_strategy(1);
    let rule = PivotRule::greedy(RankingKind::Dantzig);
    let err = strategy_improvement(&g, &s0, &rule, &TraceOptions::default()).unwrap_err();
    assert!(err.to_string().contains("not available"));
}
