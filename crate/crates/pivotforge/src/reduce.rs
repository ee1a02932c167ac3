//! The flux reduction from weak unichain MDPs to non-degenerate bounded
//! LPs, and a lockstep differential checker binding policy iteration to the
//! simplex method.
//!
//! One variable per non-sink action (column `j` carries the action with
//! Bland number `j+1`), one unit-inflow equality per non-sink state, and
//! the reward objective. The construction is validated empirically on
//! sampled policies against the three properties it must satisfy: feasible
//! non-degenerate bases, matching reduced costs, and objective equal to the
//! value sum.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{
    self, improving_switches, is_weak_unichain_policy, policy_values, reduced_cost,
    MarkovDecisionProcess, MdpError, Policy,
};
use crate::num::{rat_to_string, Rational};
use crate::rules::{BlandId, PivotRule, RuleError};
use crate::simplex::{self, bfs_from_basis, reduced_costs, Basis, LinearProgram, SimplexError};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("reduction validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// The action/variable bijection: column `j` is the action with Bland
/// number `j+1`.
#[derive(Debug, Clone)]
pub struct ReductionMap {
    pub action_of_column: Vec<usize>,
    /// Row index of each non-sink state.
    pub row_of_state: Vec<Option<usize>>,
}

impl ReductionMap {
    pub fn column_of_action(&self, a: usize) -> Option<usize> {
        self.action_of_column.iter().position(|&x| x == a)
    }

    /// The basis paired with a policy: the columns of its active non-sink
    /// actions.
    pub fn basis_of_policy(&self, m: &MarkovDecisionProcess, p: &Policy) -> Basis {
        let mut cols = Vec::new();
        for (s, &a) in p.choice.iter().enumerate() {
            if s == m.sink {
                continue;
            }
            cols.push(self.column_of_action(a).expect("non-sink action has a column"));
        }
        Basis::new(cols)
    }

    /// The policy encoded by a basis, when the basis picks exactly one
    /// action per non-sink state.
    pub fn policy_of_basis(&self, m: &MarkovDecisionProcess, basis: &Basis) -> Option<Policy> {
        let mut choice = vec![usize::MAX; m.state_count()];
        choice[m.sink] = m.available[m.sink][0];
        for &col in &basis.indices {
            let a = self.action_of_column[col];
            let s = m.actions[a].source;
            if choice[s] != usize::MAX {
                return None;
            }
            choice[s] = a;
        }
        choice
            .iter()
            .all(|&a| a != usize::MAX)
            .then_some(Policy { choice })
    }
}

/// Deterministic sample of weak unichain policies used by the validator.
fn sample_policies(m: &MarkovDecisionProcess, want: usize) -> Vec<Policy> {
    let mut out: Vec<Policy> = Vec::new();
    let push = |p: Policy, out: &mut Vec<Policy>| {
        if is_weak_unichain_policy(m, &p) && !out.contains(&p) {
            out.push(p);
        }
    };
    for round in 0..4 * want.max(2) {
        let choice: Vec<usize> = (0..m.state_count())
            .map(|s| {
                let opts = &m.available[s];
                opts[(round + s) % opts.len()]
            })
            .collect();
        push(Policy { choice }, &mut out);
        if out.len() >= want {
            break;
        }
    }
    // greedy repair walk for processes where the cyclic patterns above are
    // all non-unichain
    if out.is_empty() {
        let mut p = Policy {
            choice: (0..m.state_count()).map(|s| m.available[s][0]).collect(),
        };
        for s in 0..m.state_count() {
            if is_weak_unichain_policy(m, &p) {
                break;
            }
            for &a in &m.available[s] {
                let mut q = p.clone();
                q.choice[s] = a;
                if is_weak_unichain_policy(m, &q) {
                    p = q;
                    break;
                }
            }
        }
        push(p, &mut out);
    }
    out
}

/// Builds the LP paired with a weak unichain process and validates the
/// pairing on sampled policies.
pub fn mdp_to_lp(m: &MarkovDecisionProcess) -> Result<(LinearProgram, ReductionMap), ReduceError> {
    let errs = mdp::validate_mdp(m);
    if !errs.is_empty() {
        return Err(ReduceError::Validation(format!("invalid process: {errs:?}")));
    }
    let mut action_of_column = vec![usize::MAX; m.indexed_action_count()];
    for (i, a) in m.actions.iter().enumerate() {
        if let Some(b) = a.bland {
            action_of_column[b as usize - 1] = i;
        }
    }
    let n = action_of_column.len();
    let mut row_of_state = vec![None; m.state_count()];
    let mut rows = 0;
    for s in 0..m.state_count() {
        if s != m.sink {
            row_of_state[s] = Some(rows);
            rows += 1;
        }
    }
    // unit inflow per non-sink state: outflow minus weighted inflow is one
    let mut a = vec![vec![Rational::zero(); n]; rows];
    let mut c = vec![Rational::zero(); n];
    for (col, &act_id) in action_of_column.iter().enumerate() {
        let act = &m.actions[act_id];
        c[col] = act.reward.clone();
        if let Some(r) = row_of_state[act.source] {
            a[r][col] += Rational::one();
        }
        for (tgt, prob) in &act.transitions {
            if let Some(r) = row_of_state[*tgt] {
                a[r][col] -= prob;
            }
        }
    }
    let b = vec![Rational::one(); rows];
    let lp = LinearProgram { a, b, c };
    let map = ReductionMap {
        action_of_column,
        row_of_state,
    };
    validate_reduction(m, &lp, &map)?;
    Ok((lp, map))
}

/// Checks the three pairing properties on sampled weak unichain policies.
fn validate_reduction(
    m: &MarkovDecisionProcess,
    lp: &LinearProgram,
    map: &ReductionMap,
) -> Result<(), ReduceError> {
    let lp_errs = simplex::validate_lp(lp);
    if !lp_errs.is_empty() {
        return Err(ReduceError::Validation(format!("paired LP invalid: {lp_errs:?}")));
    }
    for p in sample_policies(m, 6) {
        let basis = map.basis_of_policy(m, &p);
        let (x, feasible) = bfs_from_basis(lp, &basis)?;
        if !feasible {
            return Err(ReduceError::Validation(
                "sampled policy's basis is infeasible".into(),
            ));
        }
        for &col in &basis.indices {
            if !x[col].is_positive() {
                return Err(ReduceError::Validation(
                    "sampled policy's basis is degenerate".into(),
                ));
            }
        }
        let vals = policy_values(m, &p)?;
        let lp_obj = lp.objective(&x);
        if lp_obj != vals.objective() {
            return Err(ReduceError::Validation(format!(
                "objective mismatch: LP {} vs value sum {}",
                rat_to_string(&lp_obj),
                rat_to_string(&vals.objective())
            )));
        }
        for (col, rc_lp) in reduced_costs(lp, &basis)? {
            let act = map.action_of_column[col];
            let rc_mdp = reduced_cost(m, &vals, act);
            if rc_lp != rc_mdp {
                return Err(ReduceError::Validation(format!(
                    "reduced cost mismatch at action {}",
                    m.actions[act].name
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LockstepRow {
    pub iter: u64,
    pub action: String,
    pub variable: u64,
    pub rc_mdp: String,
    pub rc_lp: String,
    pub obj_mdp: String,
    pub obj_lp: String,
    #[serde(rename = "match")]
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LockstepReport {
    pub rule: String,
    pub iterations: u64,
    pub rows: Vec<LockstepRow>,
    pub holds: bool,
    /// First iteration and reason when the two runs diverged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<(u64, String)>,
}

/// Runs policy iteration and the simplex method side by side under the
/// same rule and checks, per iteration: identical chosen action/variable
/// under the bijection, equal reduced-cost vectors, and equal objectives.
/// Divergence produces a failing report, not an error.
pub fn lockstep_check(
    m: &MarkovDecisionProcess,
    rule: &PivotRule,
    p0: &Policy,
    cap: u64,
) -> Result<LockstepReport, ReduceError> {
    let (lp, map) = mdp_to_lp(m)?;
    let mut policy = p0.clone();
    let mut basis = map.basis_of_policy(m, &policy);
    let mut mem_mdp = 1u64;
    let mut mem_lp = 1u64;
    let mut rows = Vec::new();
    let mut divergence: Option<(u64, String)> = None;
    let mut iter = 0u64;

    loop {
        iter += 1;
        if iter > cap {
            break;
        }
        let vals = policy_values(m, &policy)?;
        let improving_mdp = improving_switches(m, &policy, &vals);
        let rc_lp_all = reduced_costs(&lp, &basis)?;
        let improving_lp: Vec<BlandId> = rc_lp_all
            .iter()
            .filter(|(_, r)| r.is_positive())
            .map(|(j, _)| *j as BlandId + 1)
            .collect();
        let (x, _) = bfs_from_basis(&lp, &basis)?;
        let obj_mdp = vals.objective();
        let obj_lp = lp.objective(&x);

        if improving_mdp != improving_lp {
            divergence = Some((iter, "improving sets differ".into()));
            break;
        }
        // reduced costs agree on every inactive variable, not just improving
        let mut rc_bad = None;
        for (col, rc_lp) in &rc_lp_all {
            let act = map.action_of_column[*col];
            if policy.choice[m.actions[act].source] == act {
                continue;
            }
            if reduced_cost(m, &vals, act) != *rc_lp {
                rc_bad = Some(m.actions[act].name.clone());
            }
        }
        if let Some(name) = rc_bad {
            divergence = Some((iter, format!("reduced cost differs at {name}")));
            break;
        }
        if obj_mdp != obj_lp {
            divergence = Some((iter, "objectives differ".into()));
            break;
        }
        if improving_mdp.is_empty() {
            break;
        }

        let d_mdp = mdp::consult_rule(m, &policy, &vals, rule, mem_mdp)?;
        let d_lp = simplex::consult_rule(&lp, &basis, rule, mem_lp)?;
        let act = m.action_by_bland(d_mdp.chosen).expect("chosen is indexed");
        let chosen_rc = reduced_cost(m, &vals, act);
        let lp_rc = rc_lp_all
            .iter()
            .find(|(j, _)| *j as u64 + 1 == d_lp.chosen)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(Rational::zero);
        let matches = d_mdp.chosen == d_lp.chosen && d_mdp.next_memory == d_lp.next_memory;
        rows.push(LockstepRow {
            iter,
            action: m.actions[act].name.clone(),
            variable: d_lp.chosen,
            rc_mdp: rat_to_string(&chosen_rc),
            rc_lp: rat_to_string(&lp_rc),
            obj_mdp: rat_to_string(&obj_mdp),
            obj_lp: rat_to_string(&obj_lp),
            matches,
        });
        if !matches {
            divergence = Some((iter, "chosen switches differ".into()));
            break;
        }

        policy = mdp::apply_switch(&policy, m, act);
        basis = simplex::pivot(&lp, &basis, d_lp.chosen as usize - 1)?;
        // the pivot must land on the basis paired with the switched policy
        let expected = map.basis_of_policy(m, &policy);
        if basis != expected {
            divergence = Some((iter, "pivot left the policy/basis pairing".into()));
            break;
        }
        mem_mdp = d_mdp.next_memory;
        mem_lp = d_lp.next_memory;
    }

    Ok(LockstepReport {
        rule: rule.name(),
        iterations: rows.len() as u64,
        holds: divergence.is_none(),
        rows,
        divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::mdp_families::gen_mdp_counter;
    use crate::rules::{RankPicker, RankingKind};

    #[test]
    fn m2_reduction_shape() {
        let inst = gen_mdp_counter(2, Some(Rational::zero())).unwrap();
        let (lp, map) = mdp_to_lp(&inst.mdp).unwrap();
        // one variable per non-sink action, one constraint per non-sink state
        assert_eq!(lp.cols(), 10);
        assert_eq!(lp.rows(), 6);
        // objective at the initial policy's basis equals the value sum
        let basis = map.basis_of_policy(&inst.mdp, &inst.initial);
        let (x, feasible) = bfs_from_basis(&lp, &basis).unwrap();
        assert!(feasible);
        assert_eq!(lp.objective(&x), crate::num::rat_int(34));
        // and the basis decodes back to the policy
        assert_eq!(map.policy_of_basis(&inst.mdp, &basis).unwrap(), inst.initial);
    }

    #[test]
    fn lockstep_greedy_dantzig_on_m2() {
        let inst = gen_mdp_counter(2, None).unwrap();
        let rule = PivotRule::greedy(RankingKind::Dantzig);
        let report = lockstep_check(&inst.mdp, &rule, &inst.initial, 1 << 12).unwrap();
        assert!(report.holds, "divergence: {:?}", report.divergence);
        assert!(report.iterations >= 1);
    }

    #[test]
    fn lockstep_f_one_on_m3() {
        let inst = gen_mdp_counter(3, None).unwrap();
        let rule = PivotRule::f_rule(RankPicker::One);
        let report = lockstep_check(&inst.mdp, &rule, &inst.initial, 1 << 12).unwrap();
        assert!(report.holds, "divergence: {:?}", report.divergence);
        // the least-preferred rule walks the counter: at least 2^3 - 2 steps
        assert!(report.iterations >= 6, "got {}", report.iterations);
    }

    #[test]
    fn lockstep_bland_trace_lengths() {
        let inst = gen_mdp_counter(2, None).unwrap();
        let rule = PivotRule::greedy(RankingKind::Bland);
        let report = lockstep_check(&inst.mdp, &rule, &inst.initial, 1 << 12).unwrap();
        assert!(report.holds);
        let (trace, _) = crate::mdp::policy_iteration(
            &inst.mdp,
            &inst.initial,
            &rule,
            &crate::trace::TraceOptions::default(),
        )
        .unwrap();
        assert_eq!(report.iterations, trace.iterations);
    }
}
