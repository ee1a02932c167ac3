//! Family-level behavior: action copying, retry gadgets, and the
//! reduction's reduced-cost pairing across many policies.

mod common;

use pivotforge::gen::mdp_families::{gen_mdp_copied, gen_mdp_counter, gen_mdp_delta};
use pivotforge::mdp::{
    enumerate_policies, is_weak_unichain_policy, policy_iteration, policy_values, reduced_cost,
};
use pivotforge::num::rat_int;
use pivotforge::reduce::mdp_to_lp;
use pivotforge::rules::{PivotRule, RankPicker};
use pivotforge::simplex::{bfs_from_basis, reduced_costs};
use pivotforge::trace::TraceOptions;

#[test]
fn copied_counter_improving_counts_are_multiples_of_k() {
    let base = gen_mdp_counter(2, Some(rat_int(0))).unwrap();
    let k = base.mdp.actions.len() as u64;
    let inst = gen_mdp_copied(&base, k).unwrap();
    let rule = PivotRule::f_rule(RankPicker::SqrtCeil);
    let (trace, _) =
        policy_iteration(&inst.mdp, &inst.initial, &rule, &TraceOptions::default()).unwrap();
    for row in &trace.rows {
        assert_eq!(
            row.improving.len() as u64 % k,
            0,
            "iteration {}: {} improving",
            row.iteration,
            row.improving.len()
        );
    }
    // with k at least the square root of the largest improving count, the
    // square-root rule picks a copy of the least-preferred original switch
    // and the walk matches the least-preferred run on the base process
    let f1 = PivotRule::f_rule(RankPicker::One);
    let (base_trace, _) =
        policy_iteration(&base.mdp, &base.initial, &f1, &TraceOptions::default()).unwrap();
    assert_eq!(trace.iterations, base_trace.iterations);
    // and the chosen copies map back to the base walk's actions
    for (row, base_row) in trace.rows.iter().zip(&base_trace.rows) {
        let copied = &inst.mdp.actions[inst.mdp.action_by_bland(row.chosen).unwrap()].name;
        let original = &base.mdp.actions[base.mdp.action_by_bland(base_row.chosen).unwrap()].name;
        assert!(
            copied.starts_with(original.as_str()),
            "{copied} is not a copy of {original}"
        );
    }
}

#[test]
fn retry_family_walks_most_preferred_under_agreement() {
    let inst = gen_mdp_delta(2, None).unwrap();
    let rule = PivotRule::f_rule(RankPicker::K);
    let (trace, _) =
        policy_iteration(&inst.mdp, &inst.initial, &rule, &TraceOptions::default()).unwrap();
    for row in &trace.rows {
        assert!(!row.diverged, "iteration {}", row.iteration);
        // the most-preferred rule always takes the smallest improving index
        assert_eq!(row.chosen_rank, 1, "iteration {}", row.iteration);
        assert_eq!(row.chosen, row.improving[0]);
    }
    assert!(trace.iterations >= 2);
}

#[test]
fn reduction_pairs_reduced_costs_across_twenty_policies() {
    let inst = gen_mdp_counter(2, Some(rat_int(0))).unwrap();
    let m = &inst.mdp;
    let (lp, map) = mdp_to_lp(m).unwrap();
    let mut checked = 0;
    for p in enumerate_policies(m) {
        if checked >= 20 {
            break;
        }
        if !is_weak_unichain_policy(m, &p) {
            continue;
        }
        let vals = policy_values(m, &p).unwrap();
        let basis = map.basis_of_policy(m, &p);
        let (_, feasible) = bfs_from_basis(&lp, &basis).unwrap();
        assert!(feasible);
        for (col, rc_lp) in reduced_costs(&lp, &basis).unwrap() {
            let act = map.action_of_column[col];
            assert_eq!(
                rc_lp,
                reduced_cost(m, &vals, act),
                "action {}",
                m.actions[act].name
            );
        }
        checked += 1;
    }
    assert_eq!(checked, 16, "the two-level counter admits 16 policies");
}
