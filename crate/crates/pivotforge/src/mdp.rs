//! Weak unichain Markov decision processes and single-switch policy
//! iteration with exact rational values.
//!
//! Values solve the Bellman system with the sink pinned to 0. The solver
//! decomposes the policy's transition graph into strongly connected
//! components and eliminates each block exactly in reverse topological
//! order; a closed component that cannot reach the sink shows up as a
//! singular block and is reported as "values undefined".

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::Elimination;
use crate::num::{rat_to_string, Rational};
use crate::rules::{BlandId, PivotRule, RankingKind, RankingScope, RuleError, TotalPreorder};
use crate::trace::{fnv1a64, RunTrace, TerminalStatus, TraceOptions, TraceRow};

pub type StateId = usize;
pub type ActionId = usize;

#[derive(Debug, Clone)]
pub struct Action {
    pub name: String,
    pub source: StateId,
    pub reward: Rational,
    /// Positive probabilities summing to one.
    pub transitions: Vec<(StateId, Rational)>,
    /// Global index; `None` only for the sink's action.
    pub bland: Option<BlandId>,
}

#[derive(Debug, Clone)]
pub struct MarkovDecisionProcess {
    pub state_names: Vec<String>,
    pub sink: StateId,
    pub actions: Vec<Action>,
    /// Available actions per state, in action-id order.
    pub available: Vec<Vec<ActionId>>,
}

/// A deterministic policy: one available action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub choice: Vec<ActionId>,
}

#[derive(Debug, Clone)]
pub struct ValueMap {
    pub val: Vec<Rational>,
}

impl ValueMap {
    pub fn objective(&self) -> Rational {
        self.val.iter().sum()
    }
}

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid process: {0:?}")]
    InvalidMdp(Vec<String>),
    #[error("values undefined: policy is not weak unichain")]
    ValuesUndefined,
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("iteration cap of {0} exceeded")]
    CapExceeded(u64),
}

impl MarkovDecisionProcess {
    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|n| n == name)
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn action_by_bland(&self, b: BlandId) -> Option<ActionId> {
        self.actions.iter().position(|a| a.bland == Some(b))
    }

    /// Number of Bland-indexed (non-sink) actions.
    pub fn indexed_action_count(&self) -> usize {
        self.actions.iter().filter(|a| a.bland.is_some()).count()
    }
}

/// Structural validation; returns all violations.
pub fn validate_mdp(m: &MarkovDecisionProcess) -> Vec<String> {
    let mut errs = Vec::new();
    let n = m.state_count();
    if m.available.len() != n {
        errs.push("available table length disagrees with states".into());
        return errs;
    }
    for (i, a) in m.actions.iter().enumerate() {
        if a.source >= n {
            errs.push(format!("action {} has unknown source", a.name));
            continue;
        }
        if !m.available[a.source].contains(&i) {
            errs.push(format!("action {} missing from its source's set", a.name));
        }
        let mut total = Rational::zero();
        for (s, p) in &a.transitions {
            if *s >= n {
                errs.push(format!("action {} targets unknown state", a.name));
            }
            if !p.is_positive() {
                errs.push(format!("action {} has a non-positive probability", a.name));
            }
            total += p;
        }
        if !total.is_one() {
            errs.push(format!("action {} probabilities do not sum to 1", a.name));
        }
    }
    for (s, acts) in m.available.iter().enumerate() {
        if acts.is_empty() {
            errs.push(format!("state {} has no available action", m.state_names[s]));
        }
        for &a in acts {
            if a >= m.actions.len() || m.actions[a].source != s {
                errs.push(format!("available set of {} is inconsistent", m.state_names[s]));
            }
        }
    }
    if m.sink >= n {
        errs.push("sink is not a state".into());
        return errs;
    }
    let sink_actions = &m.available[m.sink];
    if sink_actions.len() != 1 {
        errs.push("sink must have exactly one action".into());
    } else {
        let a = &m.actions[sink_actions[0]];
        if !a.reward.is_zero()
            || a.transitions.len() != 1
            || a.transitions[0].0 != m.sink
            || !a.transitions[0].1.is_one()
        {
            errs.push("sink action must loop on the sink with reward 0".into());
        }
        if a.bland.is_some() {
            errs.push("sink action must not carry a bland number".into());
        }
    }
    // sink reachable from every state through some action sequence
    let mut reach = vec![false; n];
    reach[m.sink] = true;
    loop {
        let mut changed = false;
        for a in &m.actions {
            if !reach[a.source] && a.transitions.iter().any(|(s, _)| reach[*s]) {
                reach[a.source] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for s in 0..n {
        if !reach[s] {
            errs.push(format!("sink unreachable from {}", m.state_names[s]));
        }
    }
    // bland numbers form a bijection onto 1..=count
    let mut blands: Vec<BlandId> = m.actions.iter().filter_map(|a| a.bland).collect();
    blands.sort();
    let count = blands.len() as u64;
    if !blands.iter().copied().eq(1..=count) {
        errs.push("action bland numbers are not a bijection onto 1..=n".into());
    }
    errs
}

fn check_policy(m: &MarkovDecisionProcess, p: &Policy) -> Result<(), MdpError> {
    if p.choice.len() != m.state_count() {
        return Err(MdpError::InvalidMdp(vec!["policy length mismatch".into()]));
    }
    for (s, &a) in p.choice.iter().enumerate() {
        if !m.available[s].contains(&a) {
            return Err(MdpError::InvalidMdp(vec![format!(
                "policy picks unavailable action at {}",
                m.state_names[s]
            )]));
        }
    }
    Ok(())
}

/// True iff the sink is reachable from every state in the chain induced by
/// the policy.
pub fn is_weak_unichain_policy(m: &MarkovDecisionProcess, p: &Policy) -> bool {
    if check_policy(m, p).is_err() {
        return false;
    }
    let n = m.state_count();
    let mut reach = vec![false; n];
    reach[m.sink] = true;
    loop {
        let mut changed = false;
        for s in 0..n {
            if !reach[s]
                && m.actions[p.choice[s]]
                    .transitions
                    .iter()
                    .any(|(t, _)| reach[*t])
            {
                reach[s] = true;
                changed = true;
            }
        }
        if !changed {
            return reach.iter().all(|&r| r);
        }
    }
}

/// Exact solution of the Bellman system for a weak unichain policy.
pub fn policy_values(m: &MarkovDecisionProcess, p: &Policy) -> Result<ValueMap, MdpError> {
    check_policy(m, p)?;
    let n = m.state_count();
    let succ: Vec<Vec<StateId>> = (0..n)
        .map(|s| {
            m.actions[p.choice[s]]
                .transitions
                .iter()
                .map(|(t, _)| *t)
                .collect()
        })
        .collect();
    let comps = crate::graph::sccs_reverse_topological(n, &succ);
    let mut val: Vec<Option<Rational>> = vec![None; n];
    for comp in comps {
        if comp.len() == 1 && comp[0] == m.sink {
            val[m.sink] = Some(Rational::zero());
            continue;
        }
        // val(s) - sum_{s' in comp} P val(s') = rew(s) + sum_{s' outside} P val(s')
        let k = comp.len();
        let pos: BTreeMap<StateId, usize> = comp.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut a = vec![vec![Rational::zero(); k]; k];
        let mut b = vec![Rational::zero(); k];
        for (i, &s) in comp.iter().enumerate() {
            a[i][i] = Rational::one();
            let act = &m.actions[p.choice[s]];
            b[i] = act.reward.clone();
            for (t, prob) in &act.transitions {
                if let Some(&j) = pos.get(t) {
                    a[i][j] -= prob;
                } else {
                    let known = val[*t].clone().ok_or(MdpError::ValuesUndefined)?;
                    b[i] += prob * known;
                }
            }
        }
        let elim = Elimination::new(&a).ok_or(MdpError::ValuesUndefined)?;
        let x = elim.solve(&b);
        for (i, &s) in comp.iter().enumerate() {
            val[s] = Some(x[i].clone());
        }
    }
    let val: Vec<Rational> = val.into_iter().map(|v| v.expect("all components solved")).collect();
    // the active action of every state satisfies its Bellman equation
    for s in 0..n {
        let act = &m.actions[p.choice[s]];
        let mut rhs = act.reward.clone();
        for (t, prob) in &act.transitions {
            rhs += prob * &val[*t];
        }
        assert_eq!(rhs, val[s], "Bellman residual at {}", m.state_names[s]);
    }
    Ok(ValueMap { val })
}

/// Exact reduced cost of `a` under the policy's values.
pub fn reduced_cost(m: &MarkovDecisionProcess, vals: &ValueMap, a: ActionId) -> Rational {
    let act = &m.actions[a];
    let mut rc = act.reward.clone();
    for (t, prob) in &act.transitions {
        rc += prob * &vals.val[*t];
    }
    rc - &vals.val[act.source]
}

/// Improving switches: actions with strictly positive reduced cost, sorted
/// by Bland number.
pub fn improving_switches(
    m: &MarkovDecisionProcess,
    p: &Policy,
    vals: &ValueMap,
) -> Vec<BlandId> {
    let mut out = Vec::new();
    for a in &m.actions {
        let Some(b) = a.bland else { continue };
        let id = m.action_by_bland(b).expect("bland is indexed");
        if p.choice[a.source] == id {
            continue;
        }
        if reduced_cost(m, vals, id).is_positive() {
            out.push(b);
        }
    }
    out.sort();
    out
}

pub fn apply_switch(p: &Policy, m: &MarkovDecisionProcess, a: ActionId) -> Policy {
    let mut out = p.clone();
    out.choice[m.actions[a].source] = a;
    out
}

pub fn objective(vals: &ValueMap) -> Rational {
    vals.objective()
}

fn value_extras(
    m: &MarkovDecisionProcess,
    vals: &ValueMap,
    opts: &TraceOptions,
) -> BTreeMap<String, String> {
    let mut extras = BTreeMap::new();
    if opts.record_valuations {
        let rendered: Vec<String> = (0..m.state_count())
            .map(|s| format!("{}={}", m.state_names[s], rat_to_string(&vals.val[s])))
            .collect();
        extras.insert("values".to_string(), rendered.join(";"));
    }
    extras
}

fn policy_hash(p: &Policy) -> String {
    let mut bytes = Vec::new();
    for &a in &p.choice {
        bytes.extend_from_slice(&(a as u64).to_le_bytes());
    }
    format!("{:016x}", fnv1a64(&bytes))
}

struct MdpScope<'a> {
    mdp: &'a MarkovDecisionProcess,
    policy: &'a Policy,
    vals: &'a ValueMap,
    improving: Vec<BlandId>,
}

impl RankingScope for MdpScope<'_> {
    fn element_count(&self) -> u64 {
        self.mdp.indexed_action_count() as u64
    }

    fn improving(&self) -> &[BlandId] {
        &self.improving
    }

    fn ranking(&self, kind: &RankingKind) -> Result<TotalPreorder, RuleError> {
        match kind {
            RankingKind::Bland => Ok(TotalPreorder::bland(&self.improving)),
            RankingKind::Dantzig => {
                let scored = self
                    .improving
                    .iter()
                    .map(|&b| {
                        let a = self.mdp.action_by_bland(b).expect("indexed action");
                        (b, reduced_cost(self.mdp, self.vals, a))
                    })
                    .collect();
                Ok(TotalPreorder::from_scores(scored))
            }
            RankingKind::LargestIncrease => {
                let mut scored = Vec::with_capacity(self.improving.len());
                for &b in &self.improving {
                    let a = self.mdp.action_by_bland(b).expect("indexed action");
                    let next = apply_switch(self.policy, self.mdp, a);
                    let v = policy_values(self.mdp, &next).map_err(|e| {
                        RuleError::Contract(format!(
                            "objective after improving switch undefined: {e}"
                        ))
                    })?;
                    scored.push((b, v.objective()));
                }
                Ok(TotalPreorder::from_scores(scored))
            }
            other => Err(RuleError::UnsupportedRanking(other.name().to_string())),
        }
    }
}

/// One rule consultation at a fixed policy, for callers that drive the
/// loop themselves (the lockstep checker does).
pub fn consult_rule(
    m: &MarkovDecisionProcess,
    p: &Policy,
    vals: &ValueMap,
    rule: &PivotRule,
    memory: u64,
) -> Result<crate::rules::Decision, MdpError> {
    let improving = improving_switches(m, p, vals);
    let scope = MdpScope {
        mdp: m,
        policy: p,
        vals,
        improving,
    };
    Ok(rule.choose(&scope, memory)?)
}

/// Runs single-switch policy iteration. Asserts along the trace that the
/// objective strictly increases, no state value decreases, and every
/// visited policy is weak unichain.
pub fn policy_iteration(
    m: &MarkovDecisionProcess,
    p0: &Policy,
    rule: &PivotRule,
    opts: &TraceOptions,
) -> Result<(RunTrace, Policy), MdpError> {
    let errs = validate_mdp(m);
    if !errs.is_empty() {
        return Err(MdpError::InvalidMdp(errs));
    }
    let cap = if opts.cap == 0 {
        crate::trace::DEFAULT_CAP
    } else {
        opts.cap
    };
    let mut policy = p0.clone();
    let mut memory: u64 = 1;
    let mut rows = Vec::new();
    let mut status = TerminalStatus::Optimal;
    if !is_weak_unichain_policy(m, &policy) {
        return Err(MdpError::ValuesUndefined);
    }
    let mut vals = policy_values(m, &policy)?;

    loop {
        let improving = improving_switches(m, &policy, &vals);
        if improving.is_empty() {
            break;
        }
        if rows.len() as u64 >= cap {
            status = TerminalStatus::Capped;
            break;
        }
        let scope = MdpScope {
            mdp: m,
            policy: &policy,
            vals: &vals,
            improving: improving.clone(),
        };
        let decision = rule.choose(&scope, memory)?;
        if !improving.contains(&decision.chosen) {
            return Err(RuleError::Contract(format!(
                "rule chose non-improving action {}",
                decision.chosen
            ))
            .into());
        }
        let action = m.action_by_bland(decision.chosen).expect("known bland id");
        rows.push(TraceRow {
            iteration: rows.len() as u64 + 1,
            state_hash: policy_hash(&policy),
            improving,
            chosen: decision.chosen,
            chosen_rank: decision.chosen_rank as u64,
            memory,
            objective: rat_to_string(&vals.objective()),
            diverged: decision.diverged,
            tiers: if opts.record_tiers {
                Some(
                    rule.rankings()
                        .iter()
                        .map(|k| k.name().to_string())
                        .zip(decision.tiers.iter().cloned())
                        .collect(),
                )
            } else {
                None
            },
            extras: value_extras(m, &vals, opts),
        });
        let next = apply_switch(&policy, m, action);
        assert!(
            is_weak_unichain_policy(m, &next),
            "visited policy is not weak unichain"
        );
        let next_vals = policy_values(m, &next)?;
        assert!(
            next_vals.objective() > vals.objective(),
            "objective did not strictly increase"
        );
        for s in 0..m.state_count() {
            assert!(
                next_vals.val[s] >= vals.val[s],
                "value of {} decreased",
                m.state_names[s]
            );
        }
        policy = next;
        vals = next_vals;
        memory = decision.next_memory;
    }

    let trace = RunTrace {
        rule: rule.name(),
        cap,
        status,
        iterations: rows.len() as u64,
        rows,
        final_state_hash: policy_hash(&policy),
        final_objective: rat_to_string(&vals.objective()),
        final_improving: improving_switches(m, &policy, &vals).len() as u64,
        final_extras: BTreeMap::new(),
        instance_meta: None,
    };
    Ok((trace, policy))
}

/// All policies (product of available actions); desk-scale enumeration.
pub fn enumerate_policies(m: &MarkovDecisionProcess) -> Vec<Policy> {
    let mut out = vec![Policy { choice: Vec::new() }];
    for s in 0..m.state_count() {
        let mut next = Vec::with_capacity(out.len() * m.available[s].len());
        for p in &out {
            for &a in &m.available[s] {
                let mut c = p.choice.clone();
                c.push(a);
                next.push(Policy { choice: c });
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat_int;

    /// single state + sink; one action with reward 5
    fn tiny() -> (MarkovDecisionProcess, Policy) {
        let m = MarkovDecisionProcess {
            state_names: vec!["s".into(), "T".into()],
            sink: 1,
            actions: vec![
                Action {
                    name: "go".into(),
                    source: 0,
                    reward: rat_int(5),
                    transitions: vec![(1, Rational::one())],
                    bland: Some(1),
                },
                Action {
                    name: "stay".into(),
                    source: 1,
                    reward: Rational::zero(),
                    transitions: vec![(1, Rational::one())],
                    bland: None,
                },
            ],
            available: vec![vec![0], vec![1]],
        };
        let p = Policy { choice: vec![0, 1] };
        (m, p)
    }

    #[test]
    fn tiny_values() {
        let (m, p) = tiny();
        assert!(validate_mdp(&m).is_empty());
        assert!(is_weak_unichain_policy(&m, &p));
        let v = policy_values(&m, &p).unwrap();
        assert_eq!(v.val[0], rat_int(5));
        assert_eq!(v.val[1], Rational::zero());
        assert_eq!(reduced_cost(&m, &v, 0), Rational::zero());
    }

    #[test]
    fn looping_policy_is_rejected() {
        // two states that point at each other with probability one
        let m = MarkovDecisionProcess {
            state_names: vec!["x".into(), "y".into(), "T".into()],
            sink: 2,
            actions: vec![
                Action {
                    name: "x-y".into(),
                    source: 0,
                    reward: Rational::zero(),
                    transitions: vec![(1, Rational::one())],
                    bland: Some(1),
                },
                Action {
                    name: "x-T".into(),
                    source: 0,
                    reward: Rational::zero(),
                    transitions: vec![(2, Rational::one())],
                    bland: Some(2),
                },
                Action {
                    name: "y-x".into(),
                    source: 1,
                    reward: Rational::zero(),
                    transitions: vec![(0, Rational::one())],
                    bland: Some(3),
                },
                Action {
                    name: "sink".into(),
                    source: 2,
                    reward: Rational::zero(),
                    transitions: vec![(2, Rational::one())],
                    bland: None,
                },
            ],
            available: vec![vec![0, 1], vec![2], vec![3]],
        };
        assert!(validate_mdp(&m).is_empty());
        let looping = Policy {
            choice: vec![0, 2, 3],
        };
        assert!(!is_weak_unichain_policy(&m, &looping));
        assert!(matches!(
            policy_values(&m, &looping),
            Err(MdpError::ValuesUndefined)
        ));
        let fine = Policy {
            choice: vec![1, 2, 3],
        };
        assert!(is_weak_unichain_policy(&m, &fine));
        let v = policy_values(&m, &fine).unwrap();
        assert_eq!(v.val, vec![Rational::zero(); 3]);
    }

    #[test]
    fn self_retry_scc_is_solved_exactly() {
        // state s retries itself with probability 2/3 and pays reward 1
        let m = MarkovDecisionProcess {
            state_names: vec!["s".into(), "T".into()],
            sink: 1,
            actions: vec![
                Action {
                    name: "retry".into(),
                    source: 0,
                    reward: rat_int(1),
                    transitions: vec![(0, crate::num::rat(2, 3)), (1, crate::num::rat(1, 3))],
                    bland: Some(1),
                },
                Action {
                    name: "sink".into(),
                    source: 1,
                    reward: Rational::zero(),
                    transitions: vec![(1, Rational::one())],
                    bland: None,
                },
            ],
            available: vec![vec![0], vec![1]],
        };
        let p = Policy { choice: vec![0, 1] };
        let v = policy_values(&m, &p).unwrap();
        // v = 1 + (2/3) v  =>  v = 3
        assert_eq!(v.val[0], rat_int(3));
    }
}
