//! The builder's dispatch branches beyond the acceptance selectors: decoy
//! chains, delayed main counters, delayer decoys sharing a rank, and the
//! analytic bound fallback of the decoy MDP family.

use pivotforge::gen::adversarial::{build_adversarial_parity, cycle_sequence, iteration_bound};
use pivotforge::gen::mdp_families::gen_mdp_gamma;
use pivotforge::harness::{run_instance, Instance};
use pivotforge::mdp::{improving_switches, policy_values, validate_mdp};
use pivotforge::rules::{IndexSelector, PivotRule, RankPicker, SelectorTransition};

fn table_selector(rows: &[(u64, u64, u64)]) -> IndexSelector {
    IndexSelector::Table {
        transitions: rows
            .iter()
            .map(|&(h, rank, next)| SelectorTransition {
                k: None,
                n: None,
                h,
                rank,
                next,
            })
            .collect(),
        memory: rows.len() as u64,
        clamp: true,
    }
}

fn check_run(sel: IndexSelector, m_i: u64, l_i: u64) {
    let inst = build_adversarial_parity(&sel, m_i, l_i).unwrap();
    assert_eq!(inst.game.player0_edge_count() as u64, m_i);
    let rule = PivotRule::index_based(sel);
    let trace = run_instance(&Instance::Parity(inst), &rule, 1 << 20, false).unwrap();
    assert!(trace.reached_optimum());
    assert!(trace.iterations >= iteration_bound(m_i, l_i));
}

#[test]
fn dispersed_with_single_step_decoy() {
    // tail (1, 7) over [12]: big interval up high, one decoy drain per cycle
    check_run(IndexSelector::Cyclic { ranks: vec![1, 7] }, 36, 2);
}

#[test]
fn dispersed_with_delayed_main_counter() {
    // tail (5, 5): two picks per cycle hit the big interval, so the main
    // counter runs behind two-step drains
    check_run(table_selector(&[(1, 5, 2), (2, 5, 1)]), 72, 2);
}

#[test]
fn dispersed_with_delayer_decoy_sharing_a_rank() {
    // tail (9, 1, 1): the decoy interval absorbs two picks per cycle at
    // the same rank, forcing a shared drain group
    check_run(table_selector(&[(1, 9, 2), (2, 1, 3), (3, 1, 1)]), 108, 3);
}

#[test]
fn cycle_sequences_have_unique_memory_prefixes() {
    for (sel, m_i) in [
        (IndexSelector::Constant { rank: 3 }, 36),
        (IndexSelector::Cyclic { ranks: vec![2, 1, 4] }, 36),
        (
            table_selector(&[(1, 1, 4), (2, 3, 5), (3, 2, 2), (4, 1, 3), (5, 2, 5)]),
            60,
        ),
    ] {
        let cs = cycle_sequence(&sel, m_i).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        assert!(cs.h.iter().all(|&h| seen.insert(h)), "memory states repeat");
        assert!(cs.prefix_len >= 1 && cs.prefix_len <= cs.cycle_len);
        assert_eq!(cs.tail().len() as u64, cs.cycle_len - cs.prefix_len + 1);
    }
}

#[test]
fn gamma_family_builds_with_analytic_bounds() {
    // the three-level inner counter has too many policies to enumerate, so
    // the bounds fall back to the analytic route
    let m_i = 60u64;
    let f = RankPicker::Table {
        table: [(m_i, 51u64)].into_iter().collect(),
        default: Box::new(RankPicker::SqrtCeil),
    };
    let inst = gen_mdp_gamma(3, 4, &f, m_i).unwrap();
    assert!(validate_mdp(&inst.mdp).is_empty());
    assert_eq!(
        inst.meta.pointer("/bound_mode").and_then(|v| v.as_str()),
        Some("analytic")
    );
    let vals = policy_values(&inst.mdp, &inst.initial).unwrap();
    let improving = improving_switches(&inst.mdp, &inst.initial, &vals);
    assert_eq!(improving.len() as u64, m_i);
}
