//! The four adversarial MDP families.
//!
//! All of them are built around the `L`-level binary counter: two chains of
//! states where the rewarded actions encode bits and the reversed global
//! numbering makes the least-preferred improving switch walk the counter
//! through all `2^L` bit patterns. The variants perturb probabilities, copy
//! actions, or wrap actions in probability gadgets so that wider classes of
//! rules are forced through the same walk.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use super::GenError;
use crate::mdp::{
    enumerate_policies, improving_switches, is_weak_unichain_policy, policy_iteration,
    policy_values, reduced_cost, Action, ActionId, MarkovDecisionProcess, Policy, StateId,
};
use crate::num::{rat, rat_abs, rat_int, rat_pow, rat_to_string, Rational};
use crate::rules::{BlandId, PivotRule, RankPicker};
use crate::trace::TraceOptions;

/// A generated MDP instance: process, initial policy, and a metadata block
/// describing the family, its parameters and the audit-relevant action
/// classes.
#[derive(Debug, Clone)]
pub struct MdpInstance {
    pub mdp: MarkovDecisionProcess,
    pub initial: Policy,
    pub meta: Value,
}

struct MdpBuilder {
    names: Vec<String>,
    actions: Vec<Action>,
    sink: Option<StateId>,
}

impl MdpBuilder {
    fn new() -> Self {
        Self {
            names: Vec::new(),
            actions: Vec::new(),
            sink: None,
        }
    }

    fn add_state(&mut self, name: impl Into<String>) -> StateId {
        self.names.push(name.into());
        self.names.len() - 1
    }

    fn add_sink(&mut self, name: impl Into<String>) -> StateId {
        let s = self.add_state(name);
        self.sink = Some(s);
        self.actions.push(Action {
            name: "sink".into(),
            source: s,
            reward: Rational::zero(),
            transitions: vec![(s, Rational::one())],
            bland: None,
        });
        s
    }

    fn add_action(
        &mut self,
        name: impl Into<String>,
        source: StateId,
        reward: Rational,
        transitions: Vec<(StateId, Rational)>,
    ) -> usize {
        self.actions.push(Action {
            name: name.into(),
            source,
            reward,
            transitions,
            bland: None,
        });
        self.actions.len() - 1
    }

    /// Assigns Bland numbers 1.. in the given order (which must cover every
    /// non-sink action exactly once) and assembles the process.
    fn finish(mut self, bland_order: &[usize]) -> MarkovDecisionProcess {
        let sink = self.sink.expect("sink required");
        let non_sink = self.actions.iter().filter(|a| a.source != sink).count();
        assert_eq!(bland_order.len(), non_sink, "bland order must cover all actions");
        for (i, &a) in bland_order.iter().enumerate() {
            assert!(self.actions[a].bland.is_none(), "action numbered twice");
            self.actions[a].bland = Some(i as BlandId + 1);
        }
        let n = self.names.len();
        let mut available = vec![Vec::new(); n];
        for (i, a) in self.actions.iter().enumerate() {
            available[a.source].push(i);
        }
        MarkovDecisionProcess {
            state_names: self.names,
            sink,
            actions: self.actions,
            available,
        }
    }
}

fn policy_by_action_names(m: &MarkovDecisionProcess, chosen: &BTreeMap<String, String>) -> Policy {
    let mut choice = vec![usize::MAX; m.state_count()];
    for s in 0..m.state_count() {
        if m.available[s].len() == 1 {
            choice[s] = m.available[s][0];
        }
    }
    for (state, action) in chosen {
        let s = m.state_by_name(state).expect("known state");
        let a = m.action_by_name(action).expect("known action");
        choice[s] = a;
    }
    assert!(choice.iter().all(|&a| a != usize::MAX), "policy incomplete");
    Policy { choice }
}

/// Builds the `L`-level counter. With `epsilon > 0`, every action leaving
/// an `al*` state is randomized to slip to the sink with probability
/// `epsilon`. Numbering is reversed: level-1 actions carry the largest
/// Bland numbers, `al` above `be` within a level.
pub fn gen_mdp_counter(l: u64, epsilon: Option<Rational>) -> Result<MdpInstance, GenError> {
    if l < 2 {
        return Err(GenError::Precondition("counter needs L >= 2".into()));
    }
    let eps = match epsilon {
        Some(e) if e.is_negative() => {
            return Err(GenError::Precondition("epsilon must be nonnegative".into()))
        }
        Some(e) if e >= Rational::one() => {
            return Err(GenError::Precondition("epsilon must be below 1".into()))
        }
        Some(e) => e,
        None => counter_epsilon_default(l)?,
    };
    Ok(build_counter(l, &eps))
}

fn build_counter(l: u64, eps: &Rational) -> MdpInstance {
    let lr = rat_int(l as i64);
    let mut b = MdpBuilder::new();
    let alphas: Vec<StateId> = (1..=l + 1).map(|i| b.add_state(format!("al{i}"))).collect();
    let betas: Vec<StateId> = (1..=l + 1).map(|i| b.add_state(format!("be{i}"))).collect();
    let sink = b.add_sink("T");

    let spread = |target: StateId| -> Vec<(StateId, Rational)> {
        if eps.is_zero() {
            vec![(target, Rational::one())]
        } else {
            vec![(target, Rational::one() - eps), (sink, eps.clone())]
        }
    };

    let mut acts: BTreeMap<String, usize> = BTreeMap::new();
    for i in 1..=l as usize {
        let reward = rat_pow(&lr, i as u32);
        acts.insert(
            format!("al{i}_a"),
            b.add_action(format!("al{i}_a"), alphas[i - 1], Rational::zero(), spread(alphas[i])),
        );
        acts.insert(
            format!("al{i}_b"),
            b.add_action(format!("al{i}_b"), alphas[i - 1], reward.clone(), spread(betas[i])),
        );
        acts.insert(
            format!("be{i}_a"),
            b.add_action(
                format!("be{i}_a"),
                betas[i - 1],
                Rational::zero(),
                vec![(alphas[i], Rational::one())],
            ),
        );
        acts.insert(
            format!("be{i}_b"),
            b.add_action(
                format!("be{i}_b"),
                betas[i - 1],
                reward,
                vec![(betas[i], Rational::one())],
            ),
        );
    }
    let top = b.add_action(
        "top_a".to_string(),
        alphas[l as usize],
        rat_pow(&lr, l as u32 + 1),
        vec![(sink, Rational::one())],
    );
    let bottom = b.add_action(
        "top_b".to_string(),
        betas[l as usize],
        Rational::zero(),
        vec![(sink, Rational::one())],
    );

    // reversed numbering: top actions lowest, then levels L down to 1 with
    // the be-pair below the al-pair
    let mut order = vec![top, bottom];
    for i in (1..=l as usize).rev() {
        order.push(acts[&format!("be{i}_a")]);
        order.push(acts[&format!("be{i}_b")]);
        order.push(acts[&format!("al{i}_a")]);
        order.push(acts[&format!("al{i}_b")]);
    }
    let mdp = b.finish(&order);

    let mut chosen = BTreeMap::new();
    for i in 1..=l {
        chosen.insert(format!("al{i}"), format!("al{i}_a"));
        chosen.insert(format!("be{i}"), format!("be{i}_b"));
    }
    let initial = policy_by_action_names(&mdp, &chosen);

    let mut action_classes = BTreeMap::new();
    let mut action_levels = BTreeMap::new();
    for a in &mdp.actions {
        let Some(bl) = a.bland else { continue };
        let class = if a.name.starts_with("al") {
            "alpha"
        } else if a.name.starts_with("be") {
            "beta"
        } else {
            "top"
        };
        action_classes.insert(bl.to_string(), class.to_string());
        if class != "top" {
            let lvl: u64 = a.name[2..a.name.len() - 2].parse().unwrap();
            action_levels.insert(bl.to_string(), lvl);
        }
    }
    let meta = json!({
        "family": "mdp-counter",
        "L": l,
        "epsilon": rat_to_string(eps),
        "action_classes": action_classes,
        "action_levels": action_levels,
    });
    MdpInstance { mdp, initial, meta }
}

/// Default perturbation: one over (the largest value magnitude that shows
/// up in the unperturbed least-preferred-rule run, times 2^10).
pub fn counter_epsilon_default(l: u64) -> Result<Rational, GenError> {
    let inst = build_counter(l, &Rational::zero());
    let mut max_mag = Rational::one();
    let mut policy = inst.initial.clone();
    loop {
        let vals = policy_values(&inst.mdp, &policy)
            .map_err(|e| GenError::Construction(format!("unperturbed counter run failed: {e}")))?;
        for v in &vals.val {
            let a = rat_abs(v);
            if a > max_mag {
                max_mag = a;
            }
        }
        let improving = improving_switches(&inst.mdp, &policy, &vals);
        let Some(&chosen) = improving.last() else {
            break;
        };
        // unperturbed rankings tie, so walk by the largest-index choice the
        // perturbed rule would make
        let a = inst.mdp.action_by_bland(chosen).unwrap();
        policy = crate::mdp::apply_switch(&policy, &inst.mdp, a);
    }
    Ok(Rational::one() / (max_mag * rat_int(1 << 10)))
}

/// Is `p` the canonical policy for some bit pattern? Requires that no
/// action leaving an `al*` state is improving; the pattern itself is read
/// off the chain choices. Returns the encoded counter value when canonical.
pub fn counter_canonical_b(
    m: &MarkovDecisionProcess,
    p: &Policy,
    improving: &[BlandId],
    l: u64,
) -> Option<u64> {
    for &b in improving {
        let a = m.action_by_bland(b)?;
        if m.state_names[m.actions[a].source].starts_with("al") {
            return None;
        }
    }
    let mut bits = 0u64;
    for i in 1..=l {
        let al = m.state_by_name(&format!("al{i}"))?;
        let be = m.state_by_name(&format!("be{i}"))?;
        let kind = |a: ActionId| m.actions[a].name.ends_with("_b");
        if kind(p.choice[al]) == kind(p.choice[be]) {
            bits |= 1 << (i - 1);
        }
    }
    Some(bits)
}

/// Copies every non-sink action `k` times through fresh relay states. The
/// copies take over the original action's Bland slot as a contiguous
/// block, preserving the global order.
pub fn gen_mdp_copied(base: &MdpInstance, k: u64) -> Result<MdpInstance, GenError> {
    if k < 1 {
        return Err(GenError::Precondition("copying needs k >= 1".into()));
    }
    let m = &base.mdp;
    let mut b = MdpBuilder::new();
    for (s, name) in m.state_names.iter().enumerate() {
        if s == m.sink {
            b.add_sink(name.clone());
        } else {
            b.add_state(name.clone());
        }
    }
    // per original bland slot, k copies in order
    let mut order = Vec::new();
    let mut relays = Vec::new();
    let mut copy_groups: BTreeMap<String, Vec<BlandId>> = BTreeMap::new();
    let mut next_bland = 1u64;
    let by_bland: BTreeMap<BlandId, &Action> = m
        .actions
        .iter()
        .filter_map(|a| a.bland.map(|bl| (bl, a)))
        .collect();
    for (bl, a) in by_bland {
        let mut group = Vec::new();
        for c in 1..=k {
            let relay = b.add_state(format!("{}_c{c}", a.name));
            let go = b.add_action(
                format!("{}_c{c}", a.name),
                a.source,
                a.reward.clone(),
                vec![(relay, Rational::one())],
            );
            relays.push(b.add_action(
                format!("{}_c{c}_out", a.name),
                relay,
                Rational::zero(),
                a.transitions.clone(),
            ));
            order.push(go);
            group.push(next_bland);
            next_bland += 1;
        }
        copy_groups.insert(bl.to_string(), group);
    }
    // relay exits are forced choices and never improve; park them on top
    order.extend(relays);
    let mdp = b.finish(&order);

    let mut chosen = BTreeMap::new();
    for (s, &a) in base.initial.choice.iter().enumerate() {
        if s == m.sink {
            continue;
        }
        chosen.insert(m.state_names[s].clone(), format!("{}_c1", m.actions[a].name));
    }
    let initial = policy_by_action_names(&mdp, &chosen);
    let meta = json!({
        "family": "mdp-copied",
        "k": k,
        "base": base.meta.clone(),
        "copy_groups": copy_groups,
    });
    Ok(MdpInstance { mdp, initial, meta })
}

/// Probability scales for the delta gadget: strictly inside (0,1) and
/// strictly ordered along the preference order (level 1 largest).
fn delta_scale(m_scale: u64, level: u64, alpha: bool) -> Rational {
    let exp = if alpha { 2 * level - 1 } else { 2 * level };
    rat(1, 1) / rat_pow(&rat_int(m_scale as i64), exp as u32)
}

/// Wraps every counter action in the retry gadget: moving from `x` to `y`
/// now goes `x -> d(x,y) -> (activation) -> e(x,y) -> y`, where the
/// activation retries `x` with high probability. A scale of `None` starts
/// at 2 and doubles until the ranking-agreement audit passes over the
/// most-preferred-rule run.
pub fn gen_mdp_delta(l: u64, m_scale: Option<u64>) -> Result<MdpInstance, GenError> {
    if l < 2 {
        return Err(GenError::Precondition("delta family needs L >= 2".into()));
    }
    match m_scale {
        Some(ms) if ms < 2 => Err(GenError::Precondition("scale must be at least 2".into())),
        Some(ms) => Ok(build_delta(l, ms)),
        None => {
            let mut ms = 2u64;
            loop {
                let inst = build_delta(l, ms);
                if delta_run_agrees(&inst)? {
                    return Ok(inst);
                }
                ms = ms
                    .checked_mul(2)
                    .ok_or_else(|| GenError::Construction("scale overflow".into()))?;
                if ms > (1 << 20) {
                    return Err(GenError::Construction(
                        "no scale below 2^20 achieves ranking agreement".into(),
                    ));
                }
            }
        }
    }
}

fn delta_run_agrees(inst: &MdpInstance) -> Result<bool, GenError> {
    let rule = PivotRule::f_rule(RankPicker::K);
    let opts = TraceOptions::with_cap(1 << 20);
    match policy_iteration(&inst.mdp, &inst.initial, &rule, &opts) {
        Ok((trace, _)) => Ok(trace.rows.iter().all(|r| !r.diverged)),
        Err(e) => Err(GenError::Construction(format!("delta audit run failed: {e}"))),
    }
}

fn build_delta(l: u64, m_scale: u64) -> MdpInstance {
    let lr = rat_int(l as i64);
    let mut b = MdpBuilder::new();
    let alphas: Vec<StateId> = (1..=l + 1).map(|i| b.add_state(format!("al{i}"))).collect();
    let betas: Vec<StateId> = (1..=l + 1).map(|i| b.add_state(format!("be{i}"))).collect();
    let sink = b.add_sink("T");

    let mut incident: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for i in 1..=l as usize {
        let reward_b = rat_pow(&lr, i as u32);
        let pairs = [
            (format!("al{i}"), alphas[i - 1], format!("al{}", i + 1), alphas[i], Rational::zero(), true),
            (format!("al{i}"), alphas[i - 1], format!("be{}", i + 1), betas[i], reward_b.clone(), true),
            (format!("be{i}"), betas[i - 1], format!("al{}", i + 1), alphas[i], Rational::zero(), false),
            (format!("be{i}"), betas[i - 1], format!("be{}", i + 1), betas[i], reward_b.clone(), false),
        ];
        for (xname, x, yname, y, reward, is_alpha) in pairs {
            let p_x = delta_scale(m_scale, i as u64, is_alpha);
            let d = b.add_state(format!("d_{xname}_{yname}"));
            let e = b.add_state(format!("e_{xname}_{yname}"));
            let progress = b.add_action(
                format!("go_{xname}_{yname}"),
                x,
                Rational::zero(),
                vec![(d, Rational::one())],
            );
            let rearm = b.add_action(
                format!("back_{xname}_{yname}"),
                d,
                Rational::zero(),
                vec![(x, Rational::one())],
            );
            let activate = b.add_action(
                format!("act_{xname}_{yname}"),
                d,
                Rational::zero(),
                vec![(e, p_x.clone()), (x, Rational::one() - &p_x)],
            );
            b.add_action(format!("out_{xname}_{yname}"), e, reward, vec![(y, Rational::one())]);
            incident
                .entry(xname.clone())
                .or_default()
                .extend([progress, rearm, activate]);
        }
    }
    b.add_action(
        "top_a".to_string(),
        alphas[l as usize],
        rat_pow(&lr, l as u32 + 1),
        vec![(sink, Rational::one())],
    );
    b.add_action(
        "top_b".to_string(),
        betas[l as usize],
        Rational::zero(),
        vec![(sink, Rational::one())],
    );

    // the most-preferred rule reads smallest Bland numbers first: level 1
    // before level 2, al before be, construction order within a state
    let mut order = Vec::new();
    for i in 1..=l {
        for prefix in ["al", "be"] {
            order.extend(incident[&format!("{prefix}{i}")].iter().copied());
        }
    }
    // exits and the two top actions never improve; park them above
    let mut leftovers: Vec<usize> = (0..b.actions.len())
        .filter(|&i| b.actions[i].name != "sink" && !order.contains(&i))
        .collect();
    leftovers.sort_unstable();
    order.extend(leftovers);
    let mdp = b.finish(&order);

    // initial policy: chain choices as in the plain counter; the chosen
    // direction's gadget is activated, the other direction re-arms
    let mut chosen = BTreeMap::new();
    for i in 1..=l {
        chosen.insert(format!("al{i}"), format!("go_al{i}_al{}", i + 1));
        chosen.insert(format!("be{i}"), format!("go_be{i}_be{}", i + 1));
        chosen.insert(format!("d_al{i}_al{}", i + 1), format!("act_al{i}_al{}", i + 1));
        chosen.insert(format!("d_be{i}_be{}", i + 1), format!("act_be{i}_be{}", i + 1));
        chosen.insert(format!("d_al{i}_be{}", i + 1), format!("back_al{i}_be{}", i + 1));
        chosen.insert(format!("d_be{i}_al{}", i + 1), format!("back_be{i}_al{}", i + 1));
    }
    let initial = policy_by_action_names(&mdp, &chosen);

    let mut action_classes = BTreeMap::new();
    for a in &mdp.actions {
        let Some(bl) = a.bland else { continue };
        let class = match a.name.split('_').next().unwrap() {
            "go" => "progress",
            "back" => "rearm",
            "act" => "activate",
            _ => "other",
        };
        action_classes.insert(bl.to_string(), class.to_string());
    }
    let meta = json!({
        "family": "mdp-delta",
        "L": l,
        "M": m_scale,
        "action_classes": action_classes,
    });
    MdpInstance { mdp, initial, meta }
}

/// Bounds on the inner process used to size the gamma gadget: a lower
/// bound on positive reduced costs and an upper bound on objective swings.
/// Exhaustive over policies when the policy space is small enough, else
/// from coarse reward sums.
fn inner_bounds(m: &MarkovDecisionProcess) -> (Rational, Rational, &'static str) {
    let policy_count: f64 = m.available.iter().map(|a| a.len() as f64).product();
    if policy_count <= 4096.0 {
        let mut min_pos_rc: Option<Rational> = None;
        let mut max_swing = Rational::one();
        let mut objs: BTreeMap<Vec<ActionId>, Option<Rational>> = BTreeMap::new();
        let policies = enumerate_policies(m);
        for p in &policies {
            objs.insert(
                p.choice.clone(),
                is_weak_unichain_policy(m, p)
                    .then(|| policy_values(m, p).expect("weak unichain").objective()),
            );
        }
        for p in &policies {
            let Some(Some(obj)) = objs.get(&p.choice) else {
                continue;
            };
            let v = policy_values(m, p).expect("weak unichain");
            for a in 0..m.actions.len() {
                if m.actions[a].bland.is_none() || p.choice[m.actions[a].source] == a {
                    continue;
                }
                let rc = reduced_cost(m, &v, a);
                if rc.is_positive() && min_pos_rc.as_ref().map_or(true, |c| rc < *c) {
                    min_pos_rc = Some(rc.clone());
                }
                let mag = rat_abs(&rc);
                if mag > max_swing {
                    max_swing = mag;
                }
                let q = crate::mdp::apply_switch(p, m, a);
                if let Some(Some(qobj)) = objs.get(&q.choice) {
                    let swing = rat_abs(&(qobj - obj));
                    if swing > max_swing {
                        max_swing = swing;
                    }
                }
            }
        }
        (
            min_pos_rc.expect("inner process admits improving switches"),
            max_swing,
            "exhaustive",
        )
    } else {
        let mut min_prob = Rational::one();
        for a in &m.actions {
            for (_, p) in &a.transitions {
                if *p < min_prob {
                    min_prob = p.clone();
                }
            }
        }
        let reward_sum: Rational = m.actions.iter().map(|a| rat_abs(&a.reward)).sum();
        let lo = min_prob / (rat_int(1) + &reward_sum);
        let hi = (rat_int(1) + reward_sum) * rat_int(m.state_count() as i64);
        (lo, hi, "analytic")
    }
}

/// Builds the gamma family: the inner delta counter padded to
/// `f(m_i) + 1` actions, every action wrapped in the u/v gadget, plus
/// `m_i - f(m_i)` decoy states whose switches out-rank everything.
pub fn gen_mdp_gamma(
    l: u64,
    m_scale: u64,
    f: &RankPicker,
    m_i: u64,
) -> Result<MdpInstance, GenError> {
    let inner = build_delta(l, m_scale);
    let f_mi = f.pick(m_i);
    let inner_actions = inner.mdp.actions.len() as u64;
    if f_mi + 1 < inner_actions {
        return Err(GenError::Precondition(format!(
            "need f(m_i) >= {} (inner action count minus one), got f({m_i}) = {f_mi}",
            inner_actions - 1
        )));
    }
    if m_i < f_mi {
        return Err(GenError::Precondition("need m_i >= f(m_i)".into()));
    }
    let (l_bound, u_inner, bound_mode) = inner_bounds(&inner.mdp);

    // pad with single-action states until exactly f(m_i)+1 actions
    let mut padded = inner.mdp.clone();
    let mut initial_map: BTreeMap<String, String> = BTreeMap::new();
    for (s, &a) in inner.initial.choice.iter().enumerate() {
        if s != padded.sink {
            initial_map.insert(padded.state_names[s].clone(), padded.actions[a].name.clone());
        }
    }
    {
        let mut next_pad = 0;
        let mut next_bland = padded.actions.iter().filter(|a| a.bland.is_some()).count() as u64;
        while (padded.actions.len() as u64) < f_mi + 1 {
            let s = padded.state_names.len();
            padded.state_names.push(format!("pad{next_pad}"));
            next_bland += 1;
            padded.actions.push(Action {
                name: format!("pad{next_pad}_a"),
                source: s,
                reward: Rational::zero(),
                transitions: vec![(padded.sink, Rational::one())],
                bland: Some(next_bland),
            });
            padded.available.push(vec![padded.actions.len() - 1]);
            next_pad += 1;
        }
    }

    // the outer objective sums every wrapped state's value, so scale the
    // inner swing bound by the eventual state count before sizing p and q
    let state_estimate = padded.state_names.len() as i64 + 2 * (f_mi as i64) + (m_i as i64) + 2;
    let u_bound = u_inner.clone() * rat_int(state_estimate) + rat_int(1);
    let p1 = &l_bound / (rat_int(2) * (&l_bound + &u_bound));
    let q1 = &p1 * &l_bound / rat_int(2);
    // geometric separation of the activation rewards: consecutive gadgets
    // must differ by more than the worst-case spread (L/2, L/2 + U], so the
    // ratio has to clear 1 + 2U/L
    let scale = Rational::one() / (rat_int(2) * &u_bound / &l_bound + rat_int(2));

    let mut b = MdpBuilder::new();
    for (s, name) in padded.state_names.iter().enumerate() {
        if s == padded.sink {
            b.add_sink(name.clone());
        } else {
            b.add_state(name.clone());
        }
    }
    // wrap every bland-indexed action of the padded process
    let by_bland: BTreeMap<BlandId, Action> = padded
        .actions
        .iter()
        .filter(|a| a.bland.is_some())
        .map(|a| (a.bland.unwrap(), a.clone()))
        .collect();
    let mut s2_actions = Vec::new();
    let mut s3_actions = Vec::new();
    let mut forced = Vec::new();
    let mut rank = 0u32;
    for a in by_bland.values() {
        let u = b.add_state(format!("u_{}", a.name));
        let v = b.add_state(format!("v_{}", a.name));
        let enter = b.add_action(
            format!("w_{}", a.name),
            a.source,
            Rational::zero(),
            vec![(v, Rational::one())],
        );
        let relay = b.add_action(
            format!("uv_{}", a.name),
            u,
            Rational::zero(),
            vec![(v, Rational::one())],
        );
        let p_k = &p1 * rat_pow(&scale, rank);
        let q_k = &q1 * rat_pow(&scale, rank);
        rank += 1;
        let ua = b.add_action(
            format!("ua_{}", a.name),
            u,
            q_k,
            vec![(a.source, p_k.clone()), (v, Rational::one() - &p_k)],
        );
        let out = b.add_action(
            format!("vo_{}", a.name),
            v,
            a.reward.clone(),
            a.transitions.clone(),
        );
        s2_actions.push(enter);
        s3_actions.push(ua);
        forced.push(relay);
        forced.push(out);
    }
    // decoys
    let gamma0 = b.add_state("g0");
    forced.push(b.add_action("g0_a", gamma0, Rational::zero(), vec![(padded.sink, Rational::one())]));
    let decoy_count = m_i - f_mi;
    let mut s1_actions = Vec::new();
    let mut decoy_stay = Vec::new();
    for k in 1..=decoy_count {
        let gk = b.add_state(format!("g{k}"));
        decoy_stay.push(b.add_action(
            format!("g{k}_t"),
            gk,
            Rational::zero(),
            vec![(padded.sink, Rational::one())],
        ));
        s1_actions.push(b.add_action(
            format!("g{k}_d"),
            gk,
            &u_bound + rat_int(k as i64),
            vec![(gamma0, Rational::one())],
        ));
    }

    // Bland order: decoys (largest reward first), the wrapped switches in
    // inner order, the activations, then everything that never improves
    let mut order = Vec::new();
    order.extend(s1_actions.iter().rev().copied());
    order.extend(s2_actions.iter().copied());
    order.extend(s3_actions.iter().copied());
    order.extend(decoy_stay.iter().copied());
    order.extend(forced.iter().copied());
    let s1_len = s1_actions.len() as u64;
    let s2_start = s1_len + 1;
    let s3_start = s2_start + s2_actions.len() as u64;
    let mdp = b.finish(&order);

    // induced initial policy
    let mut chosen = BTreeMap::new();
    for (state, action) in &initial_map {
        chosen.insert(state.clone(), format!("w_{action}"));
    }
    for a in by_bland.values() {
        chosen.insert(format!("u_{}", a.name), format!("uv_{}", a.name));
    }
    for k in 1..=decoy_count {
        chosen.insert(format!("g{k}"), format!("g{k}_t"));
    }
    let initial = policy_by_action_names(&mdp, &chosen);

    let mut action_classes = BTreeMap::new();
    for a in &mdp.actions {
        let Some(bl) = a.bland else { continue };
        let class = if bl <= s1_len {
            "decoy"
        } else if bl < s3_start {
            "wrapped-switch"
        } else if bl < s3_start + s3_actions.len() as u64 {
            "activation"
        } else {
            "other"
        };
        action_classes.insert(bl.to_string(), class.to_string());
    }
    let meta = json!({
        "family": "mdp-gamma",
        "L": l,
        "M": m_scale,
        "m_i": m_i,
        "f_m_i": f_mi,
        "l_bound": rat_to_string(&l_bound),
        "u_bound": rat_to_string(&u_bound),
        "activation_scale": rat_to_string(&scale),
        "bound_mode": bound_mode,
        "s2_range": [s2_start, s3_start - 1],
        "action_classes": action_classes,
    });
    Ok(MdpInstance { mdp, initial, meta })
}
