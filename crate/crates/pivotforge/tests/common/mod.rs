#![allow(dead_code)]

//! Shared helpers for the integration suites: seeded random games, MDPs
//! and LPs, plus exhaustive optimality oracles.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use pivotforge::mdp::{
    enumerate_policies, is_weak_unichain_policy, policy_values, Action, MarkovDecisionProcess,
    Policy,
};
use pivotforge::num::{rat, rat_int, Rational};
use pivotforge::ordering::Priority;
use pivotforge::parity::{
    enumerate_strategies, is_admissible, validate_game, valuations, Owner, SinkParityGame,
    Strategy, ValuationMap,
};
use pivotforge::simplex::{bfs_from_basis, Basis, LinearProgram};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random layered sink parity game: layers of random-owner vertices with
/// forward edges only, so every strategy is admissible.
pub fn random_layered_game(rng: &mut ChaCha8Rng, layers: usize, width: usize) -> SinkParityGame {
    let mut names = Vec::new();
    let mut owner = Vec::new();
    let mut priority = Vec::new();
    let mut layer_ids: Vec<Vec<usize>> = Vec::new();
    for l in 0..layers {
        let mut ids = Vec::new();
        for w in 0..width {
            ids.push(names.len());
            names.push(format!("v{l}_{w}"));
            owner.push(if rng.gen_bool(0.5) {
                Owner::Player0
            } else {
                Owner::Player1
            });
            priority.push(Priority::Value(rng.gen_range(2..10)));
        }
        layer_ids.push(ids);
    }
    let sink = names.len();
    names.push("T".into());
    owner.push(Owner::Sink);
    priority.push(Priority::Bottom);
    let mut succ = vec![Vec::new(); names.len()];
    succ[sink].push(sink);
    let mut p0_edges = Vec::new();
    for l in 0..layers {
        let targets: Vec<usize> = if l + 1 < layers {
            layer_ids[l + 1].clone()
        } else {
            vec![sink]
        };
        for &v in &layer_ids[l] {
            let deg = rng.gen_range(1..=targets.len().min(3));
            let mut choices = targets.clone();
            choices.shuffle(rng);
            for &t in choices.iter().take(deg) {
                succ[v].push(t);
                if matches!(owner[v], Owner::Player0) {
                    p0_edges.push((v, t));
                }
            }
        }
    }
    p0_edges.shuffle(rng);
    let bland: BTreeMap<u64, (usize, usize)> = p0_edges
        .into_iter()
        .enumerate()
        .map(|(i, e)| (i as u64 + 1, e))
        .collect();
    let g = SinkParityGame {
        names,
        owner,
        priority,
        succ,
        sink,
        bland,
    };
    assert!(validate_game(&g).is_empty());
    g
}

pub fn some_strategy(g: &SinkParityGame) -> Strategy {
    let choice = (0..g.vertex_count())
        .filter(|&v| matches!(g.owner[v], Owner::Player0))
        .map(|v| (v, g.succ[v][0]))
        .collect();
    Strategy { choice }
}

/// The pointwise-maximal valuations over all admissible strategies.
pub fn optimal_valuations(g: &SinkParityGame) -> ValuationMap {
    let mut best: Option<ValuationMap> = None;
    for s in enumerate_strategies(g) {
        if !is_admissible(g, &s) {
            continue;
        }
        let Ok(v) = valuations(g, &s) else { continue };
        best = Some(match best {
            None => v,
            Some(b) => {
                if (0..g.vertex_count()).all(|x| v.eval[x] >= b.eval[x]) {
                    v
                } else {
                    b
                }
            }
        });
    }
    best.expect("game admits an admissible strategy")
}

/// A random layered MDP with two actions per inner state; acyclic into the
/// sink, so every policy is weak unichain.
pub fn random_layered_mdp(rng: &mut ChaCha8Rng, layers: usize, width: usize) -> (MarkovDecisionProcess, Policy) {
    let mut state_names = Vec::new();
    let mut layer_ids: Vec<Vec<usize>> = Vec::new();
    for l in 0..layers {
        let mut ids = Vec::new();
        for w in 0..width {
            ids.push(state_names.len());
            state_names.push(format!("s{l}_{w}"));
        }
        layer_ids.push(ids);
    }
    let sink = state_names.len();
    state_names.push("T".into());
    let mut actions = vec![];
    for l in 0..layers {
        let targets: Vec<usize> = if l + 1 < layers {
            layer_ids[l + 1].clone()
        } else {
            vec![sink]
        };
        for &s in &layer_ids[l] {
            for a in 0..2 {
                let reward = rat_int(rng.gen_range(-5..10));
                let t1 = targets[rng.gen_range(0..targets.len())];
                let transitions = if targets.len() > 1 && rng.gen_bool(0.4) {
                    let mut t2 = targets[rng.gen_range(0..targets.len())];
                    while t2 == t1 {
                        t2 = targets[rng.gen_range(0..targets.len())];
                    }
                    vec![(t1, rat(1, 3)), (t2, rat(2, 3))]
                } else {
                    vec![(t1, Rational::one())]
                };
                actions.push(Action {
                    name: format!("{}_{a}", state_names[s]),
                    source: s,
                    reward,
                    transitions,
                    bland: None,
                });
            }
        }
    }
    actions.push(Action {
        name: "sink".into(),
        source: sink,
        reward: Rational::zero(),
        transitions: vec![(sink, Rational::one())],
        bland: None,
    });
    // random bland assignment over the non-sink actions
    let mut order: Vec<usize> = (0..actions.len() - 1).collect();
    order.shuffle(rng);
    for (i, &a) in order.iter().enumerate() {
        actions[a].bland = Some(i as u64 + 1);
    }
    let mut available = vec![Vec::new(); state_names.len()];
    for (i, a) in actions.iter().enumerate() {
        available[a.source].push(i);
    }
    let m = MarkovDecisionProcess {
        state_names,
        sink,
        actions,
        available,
    };
    let p = Policy {
        choice: (0..m.state_count()).map(|s| m.available[s][0]).collect(),
    };
    (m, p)
}

/// The pointwise-maximal values over all weak unichain policies.
pub fn optimal_values(m: &MarkovDecisionProcess) -> Vec<Rational> {
    let mut best: Option<Vec<Rational>> = None;
    for p in enumerate_policies(m) {
        if !is_weak_unichain_policy(m, &p) {
            continue;
        }
        let v = policy_values(m, &p).unwrap().val;
        best = Some(match best {
            None => v,
            Some(b) => {
                if (0..v.len()).all(|s| v[s] >= b[s]) {
                    v
                } else {
                    b
                }
            }
        });
    }
    best.expect("process admits a weak unichain policy")
}

/// A random bounded, structurally non-degenerate LP with a known feasible
/// starting basis, by rejection sampling.
pub fn random_nondegenerate_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Option<(LinearProgram, Basis)> {
    let a: Vec<Vec<Rational>> = (0..m)
        .map(|_| (0..n).map(|_| rat_int(rng.gen_range(-3..=3))).collect())
        .collect();
    let c: Vec<Rational> = (0..n).map(|_| rat_int(rng.gen_range(-4..=4))).collect();
    if pivotforge::linalg::rank(&a) != m {
        return None;
    }
    // seed feasibility from a strictly positive basic solution
    let cols: Vec<usize> = {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        let mut picked = all[..m].to_vec();
        picked.sort();
        picked
    };
    let xb: Vec<Rational> = (0..m).map(|_| rat_int(rng.gen_range(1..=4))).collect();
    let b: Vec<Rational> = (0..m)
        .map(|i| {
            cols.iter()
                .zip(&xb)
                .map(|(&j, x)| &a[i][j] * x)
                .sum()
        })
        .collect();
    let lp = LinearProgram { a, b, c };
    let basis = Basis::new(cols);
    match bfs_from_basis(&lp, &basis) {
        Ok((_, true)) => {}
        _ => return None,
    }
    // structural non-degeneracy: every feasible basis is strictly positive
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let cand = Basis::new(subset.clone());
        if let Ok((x, true)) = bfs_from_basis(&lp, &cand) {
            for &j in &cand.indices {
                if x[j].is_zero() || x[j].is_negative() {
                    return None;
                }
            }
        }
        let mut i = m;
        loop {
            if i == 0 {
                return Some((lp, basis));
            }
            i -= 1;
            if subset[i] != i + n - m {
                subset[i] += 1;
                for j in i + 1..m {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}
