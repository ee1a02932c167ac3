//! Sink parity games and single-switch strategy improvement.
//!
//! A game has player-0 and player-1 vertices, a unique absorbing sink with
//! bottom priority, and a distinct positive Bland number on every player-0
//! edge. Fixing an admissible player-0 strategy turns valuation into a
//! one-player shortest-path problem for player 1 under the signed-power
//! order; we solve it by relaxation and detect non-admissibility as a
//! failure to reach a fixpoint with finite valuations.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::ordering::{signed_power, Priority, ValuationMultiset};
use crate::rules::{BlandId, PivotRule, RankingKind, RankingScope, RuleError, TotalPreorder};
use crate::trace::{
    fnv1a64, ordering_label, RunTrace, TerminalStatus, TraceOptions, TraceRow,
};

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Player0,
    Player1,
    Sink,
}

/// A sink parity game. Vertices are dense indices; names are kept for I/O.
#[derive(Debug, Clone)]
pub struct SinkParityGame {
    pub names: Vec<String>,
    pub owner: Vec<Owner>,
    pub priority: Vec<Priority>,
    pub succ: Vec<Vec<VertexId>>,
    pub sink: VertexId,
    /// Player-0 edges by Bland number.
    pub bland: BTreeMap<BlandId, (VertexId, VertexId)>,
}

/// A positional player-0 strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub choice: BTreeMap<VertexId, VertexId>,
}

/// Valuations for all vertices plus the recorded optimal counterstrategy.
#[derive(Debug, Clone)]
pub struct ValuationMap {
    pub val: Vec<ValuationMultiset>,
    pub eval: Vec<BigInt>,
    /// Player-1 vertices' optimal choices.
    pub counter: BTreeMap<VertexId, VertexId>,
    /// Comparison base used: |V0| + |V1|.
    pub base: u64,
}

impl ValuationMap {
    pub fn objective(&self) -> BigInt {
        self.eval.iter().sum()
    }

    pub fn cmp(&self, a: VertexId, b: VertexId) -> Ordering {
        self.eval[a].cmp(&self.eval[b])
    }
}

#[derive(Debug, Error)]
pub enum ParityError {
    #[error("invalid game: {0:?}")]
    InvalidGame(Vec<String>),
    #[error("strategy is not admissible: no fixpoint with finite valuations ({0})")]
    NoFiniteValuation(String),
    #[error("strategy chooses {1} at {0}, which is not an edge")]
    BadStrategyEdge(String, String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("iteration cap of {0} exceeded")]
    CapExceeded(u64),
}

impl SinkParityGame {
    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    /// Comparison base `t = |V0 ∪ V1|`, fixed by the game.
    pub fn base(&self) -> u64 {
        self.owner
            .iter()
            .filter(|o| !matches!(o, Owner::Sink))
            .count() as u64
    }

    pub fn player0_edge_count(&self) -> usize {
        self.bland.len()
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn bland_of(&self, src: VertexId, tgt: VertexId) -> Option<BlandId> {
        self.bland
            .iter()
            .find(|(_, &(s, t))| s == src && t == tgt)
            .map(|(&b, _)| b)
    }

    pub fn edge_of_bland(&self, b: BlandId) -> Option<(VertexId, VertexId)> {
        self.bland.get(&b).copied()
    }

    fn max_priority(&self) -> i64 {
        self.priority
            .iter()
            .filter_map(|p| p.value())
            .max()
            .unwrap_or(0)
    }
}

/// Checks every structural invariant; returns all violations found.
pub fn validate_game(g: &SinkParityGame) -> Vec<String> {
    let mut errs = Vec::new();
    let n = g.vertex_count();
    if g.owner.len() != n || g.priority.len() != n || g.succ.len() != n {
        errs.push("vertex table lengths disagree".to_string());
        return errs;
    }
    for v in 0..n {
        if g.succ[v].is_empty() {
            errs.push(format!("vertex {} has no outgoing edge", g.names[v]));
        }
        let mut seen = BTreeSet::new();
        for &w in &g.succ[v] {
            if w >= n {
                errs.push(format!("edge from {} to unknown vertex", g.names[v]));
            } else if !seen.insert(w) {
                errs.push(format!("duplicate edge {} -> {}", g.names[v], g.names[w]));
            }
        }
    }
    if g.sink >= n {
        errs.push("sink is not a vertex".to_string());
        return errs;
    }
    if g.succ[g.sink] != vec![g.sink] {
        errs.push("sink self-loop missing".to_string());
    }
    if !matches!(g.owner[g.sink], Owner::Sink) {
        errs.push("sink vertex is not marked as the sink".to_string());
    }
    for v in 0..n {
        match (v == g.sink, g.priority[v].is_bottom()) {
            (true, false) => errs.push("sink must have bottom priority".to_string()),
            (false, true) => errs.push(format!(
                "non-sink vertex {} has bottom priority",
                g.names[v]
            )),
            _ => {}
        }
        if let Some(p) = g.priority[v].value() {
            if p < 0 {
                errs.push(format!("negative priority at {}", g.names[v]));
            }
        }
    }
    // bland numbers: a bijection onto 1..=m over the player-0 edges
    let mut covered = BTreeSet::new();
    for (&b, &(src, tgt)) in &g.bland {
        if src >= n || !matches!(g.owner[src], Owner::Player0) {
            errs.push(format!("bland {b} is not on a player-0 edge"));
            continue;
        }
        if !g.succ[src].contains(&tgt) {
            errs.push(format!("bland {b} refers to a missing edge"));
        }
        if !covered.insert((src, tgt)) {
            errs.push("bland not bijective: duplicate edge".to_string());
        }
    }
    let m = g.bland.len() as u64;
    if !g.bland.keys().copied().eq(1..=m) {
        errs.push("bland not bijective".to_string());
    }
    for v in 0..n {
        if matches!(g.owner[v], Owner::Player0) {
            for &w in &g.succ[v] {
                if !covered.contains(&(v, w)) {
                    errs.push(format!(
                        "player-0 edge {} -> {} has no bland number",
                        g.names[v], g.names[w]
                    ));
                }
            }
        }
    }
    errs
}

fn check_strategy(g: &SinkParityGame, s: &Strategy) -> Result<(), ParityError> {
    for v in 0..g.vertex_count() {
        if matches!(g.owner[v], Owner::Player0) {
            match s.choice.get(&v) {
                Some(&w) if g.succ[v].contains(&w) => {}
                Some(&w) => {
                    return Err(ParityError::BadStrategyEdge(
                        g.names[v].clone(),
                        g.names.get(w).cloned().unwrap_or_default(),
                    ))
                }
                None => {
                    return Err(ParityError::BadStrategyEdge(
                        g.names[v].clone(),
                        "<missing>".to_string(),
                    ))
                }
            }
        }
    }
    Ok(())
}

/// Successors available under `E_sigma`: the strategy edge for player 0,
/// all edges for player 1, nothing past the sink.
fn sigma_successors<'a>(g: &'a SinkParityGame, s: &Strategy, v: VertexId) -> Vec<VertexId> {
    match g.owner[v] {
        Owner::Player0 => vec![s.choice[&v]],
        Owner::Player1 => g.succ[v].clone(),
        Owner::Sink => vec![],
    }
}

/// True iff every cycle of `E_sigma`, other than the sink self-loop, has
/// even maximal priority.
pub fn is_admissible(g: &SinkParityGame, s: &Strategy) -> bool {
    if check_strategy(g, s).is_err() {
        return false;
    }
    let n = g.vertex_count();
    // A cycle with odd maximal priority p exists iff, in the subgraph
    // induced on priorities <= p, some priority-p vertex lies on a cycle.
    let odd_ps: BTreeSet<i64> = g
        .priority
        .iter()
        .filter_map(|pr| pr.value())
        .filter(|p| p % 2 == 1)
        .collect();
    for &p in &odd_ps {
        let keep: Vec<bool> = (0..n)
            .map(|v| v != g.sink && g.priority[v].value().map_or(false, |q| q <= p))
            .collect();
        let succ: Vec<Vec<VertexId>> = (0..n)
            .map(|v| {
                if !keep[v] {
                    return Vec::new();
                }
                sigma_successors(g, s, v)
                    .into_iter()
                    .filter(|&w| keep[w])
                    .collect()
            })
            .collect();
        let cyc = crate::graph::on_cycle(n, &succ);
        if (0..n).any(|v| cyc[v] && g.priority[v].value() == Some(p)) {
            return false;
        }
    }
    true
}

/// Computes valuations for an admissible strategy by relaxation: at most
/// `|V|` rounds; a change in the final round (or an unreachable sink) means
/// there is no fixpoint with finite valuations.
pub fn valuations(g: &SinkParityGame, s: &Strategy) -> Result<ValuationMap, ParityError> {
    check_strategy(g, s)?;
    let n = g.vertex_count();
    let t = g.base();
    let max_p = g.max_priority();
    let powers: Vec<BigInt> = (0..=max_p).map(|p| signed_power(t, p)).collect();

    let mut val: Vec<Option<(ValuationMultiset, BigInt)>> = vec![None; n];
    val[g.sink] = Some((ValuationMultiset::empty(), BigInt::zero()));
    let mut counter: BTreeMap<VertexId, VertexId> = BTreeMap::new();

    // Shortest paths under the strategy are simple (even cycles have
    // strictly positive weight), so n+2 relaxation rounds either converge
    // or witness an odd-dominated cycle.
    let rounds = n + 2;
    let mut converged = false;
    for _ in 0..rounds {
        let mut changed = false;
        for v in 0..n {
            if v == g.sink {
                continue;
            }
            let p = g.priority[v].value().expect("non-sink priority");
            let best = sigma_successors(g, s, v)
                .into_iter()
                .filter_map(|w| val[w].as_ref().map(|x| (w, x.clone())))
                .min_by(|a, b| a.1 .1.cmp(&b.1 .1).then(a.0.cmp(&b.0)));
            if let Some((_, (ms, ev))) = best {
                let cand_eval = ev + &powers[p as usize];
                let replace = match &val[v] {
                    None => true,
                    Some((_, cur)) => cand_eval < *cur,
                };
                if replace {
                    let ms = crate::ordering::multiset_insert(&ms, Priority::Value(p));
                    val[v] = Some((ms, cand_eval));
                    changed = true;
                }
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ParityError::NoFiniteValuation(
            "valuation relaxation did not converge".to_string(),
        ));
    }
    for v in 0..n {
        if val[v].is_none() {
            return Err(ParityError::NoFiniteValuation(format!(
                "no sink path from {}",
                g.names[v]
            )));
        }
    }
    // Recompute the counterstrategy from the fixpoint so ties break by
    // smallest vertex id deterministically.
    let eval: Vec<BigInt> = val.iter().map(|x| x.as_ref().unwrap().1.clone()).collect();
    for v in 0..n {
        if matches!(g.owner[v], Owner::Player1) {
            let w = g.succ[v]
                .iter()
                .copied()
                .min_by(|&a, &b| eval[a].cmp(&eval[b]).then(a.cmp(&b)))
                .expect("player-1 vertex has successors");
            counter.insert(v, w);
        }
    }
    Ok(ValuationMap {
        val: val.iter().map(|x| x.as_ref().unwrap().0.clone()).collect(),
        eval,
        counter,
        base: t,
    })
}

/// The improving switches for `s`, sorted by Bland number: edges `(v, w)`
/// whose target valuation strictly beats the current choice's.
pub fn improving_switches(
    g: &SinkParityGame,
    s: &Strategy,
    vals: &ValuationMap,
) -> Vec<BlandId> {
    let mut out = Vec::new();
    for (&b, &(src, tgt)) in &g.bland {
        let cur = s.choice[&src];
        if vals.eval[tgt] > vals.eval[cur] {
            out.push(b);
        }
    }
    out
}

/// Applies a switch, returning the new strategy.
pub fn apply_switch(s: &Strategy, edge: (VertexId, VertexId)) -> Strategy {
    let mut out = s.clone();
    out.choice.insert(edge.0, edge.1);
    out
}

fn strategy_hash(g: &SinkParityGame, s: &Strategy) -> String {
    let mut bytes = Vec::new();
    for (&v, &w) in &s.choice {
        bytes.extend_from_slice(&(v as u64).to_le_bytes());
        bytes.extend_from_slice(&(w as u64).to_le_bytes());
    }
    let _ = g;
    format!("{:016x}", fnv1a64(&bytes))
}

struct ParityScope<'a> {
    game: &'a SinkParityGame,
    strategy: &'a Strategy,
    improving: Vec<BlandId>,
}

impl RankingScope for ParityScope<'_> {
    fn element_count(&self) -> u64 {
        self.game.player0_edge_count() as u64
    }

    fn improving(&self) -> &[BlandId] {
        &self.improving
    }

    fn ranking(&self, kind: &RankingKind) -> Result<TotalPreorder, RuleError> {
        match kind {
            RankingKind::Bland => Ok(TotalPreorder::bland(&self.improving)),
            RankingKind::LargestIncrease => {
                let mut scored = Vec::with_capacity(self.improving.len());
                for &b in &self.improving {
                    let edge = self.game.edge_of_bland(b).expect("improving edge exists");
                    let next = apply_switch(self.strategy, edge);
                    let v = valuations(self.game, &next).map_err(|e| {
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

fn watch_extras(
    g: &SinkParityGame,
    vals: &ValuationMap,
    opts: &TraceOptions,
) -> BTreeMap<String, String> {
    let mut extras = BTreeMap::new();
    for wp in &opts.watch_pairs {
        if let (Some(a), Some(b)) = (g.vertex_by_name(&wp.first), g.vertex_by_name(&wp.second)) {
            extras.insert(wp.label.clone(), ordering_label(vals.cmp(a, b)).to_string());
        }
    }
    if opts.record_valuations {
        let rendered: Vec<String> = (0..g.vertex_count())
            .map(|v| format!("{}={}", g.names[v], vals.val[v]))
            .collect();
        extras.insert("valuations".to_string(), rendered.join(";"));
    }
    extras
}

/// Runs single-switch strategy improvement until no improving switch
/// remains or the cap is hit. Every visited strategy is checked admissible
/// and valuations are asserted monotone.
pub fn strategy_improvement(
    g: &SinkParityGame,
    s0: &Strategy,
    rule: &PivotRule,
    opts: &TraceOptions,
) -> Result<(RunTrace, Strategy), ParityError> {
    let errs = validate_game(g);
    if !errs.is_empty() {
        return Err(ParityError::InvalidGame(errs));
    }
    let cap = if opts.cap == 0 {
        crate::trace::DEFAULT_CAP
    } else {
        opts.cap
    };
    let mut strategy = s0.clone();
    let mut memory: u64 = 1;
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut prev_evals: Option<Vec<BigInt>> = None;
    let mut status = TerminalStatus::Optimal;
    let mut vals = valuations(g, &strategy)?;

    loop {
        assert!(
            is_admissible(g, &strategy),
            "visited strategy is not admissible"
        );
        if let Some(prev) = &prev_evals {
            for v in 0..g.vertex_count() {
                assert!(
                    vals.eval[v] >= prev[v],
                    "valuation of {} decreased during improvement",
                    g.names[v]
                );
            }
        }
        let improving = improving_switches(g, &strategy, &vals);
        if improving.is_empty() {
            break;
        }
        if rows.len() as u64 >= cap {
            status = TerminalStatus::Capped;
            break;
        }
        let scope = ParityScope {
            game: g,
            strategy: &strategy,
            improving: improving.clone(),
        };
        let decision = rule.choose(&scope, memory)?;
        if !improving.contains(&decision.chosen) {
            return Err(RuleError::Contract(format!(
                "rule chose non-improving edge {}",
                decision.chosen
            ))
            .into());
        }
        let edge = g.edge_of_bland(decision.chosen).expect("known bland id");
        rows.push(TraceRow {
            iteration: rows.len() as u64 + 1,
            state_hash: strategy_hash(g, &strategy),
            improving,
            chosen: decision.chosen,
            chosen_rank: decision.chosen_rank as u64,
            memory,
            objective: vals.objective().to_string(),
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
            extras: watch_extras(g, &vals, opts),
        });
        let switched = edge.0;
        let next = apply_switch(&strategy, edge);
        let next_vals = valuations(g, &next)?;
        assert!(
            next_vals.eval[switched] > vals.eval[switched],
            "switched vertex {} did not strictly improve",
            g.names[switched]
        );
        prev_evals = Some(vals.eval.clone());
        strategy = next;
        vals = next_vals;
        memory = decision.next_memory;
    }

    let trace = RunTrace {
        rule: rule.name(),
        cap,
        status,
        iterations: rows.len() as u64,
        rows,
        final_state_hash: strategy_hash(g, &strategy),
        final_objective: vals.objective().to_string(),
        final_improving: improving_switches(g, &strategy, &vals).len() as u64,
        final_extras: watch_extras(g, &vals, opts),
        instance_meta: None,
    };
    Ok((trace, strategy))
}

/// The standard transformation: repeatedly, while two vertices share a
/// priority, keep the one created first at `p` and raise every other vertex
/// with priority at least `p` by 2. Preserves relative priority order and
/// every vertex's parity.
pub fn standard_transformation(g: &SinkParityGame) -> SinkParityGame {
    let mut out = g.clone();
    loop {
        let mut by_priority: BTreeMap<i64, Vec<VertexId>> = BTreeMap::new();
        for v in 0..out.vertex_count() {
            if let Some(p) = out.priority[v].value() {
                by_priority.entry(p).or_default().push(v);
            }
        }
        let Some((&p, members)) = by_priority.iter().find(|(_, vs)| vs.len() > 1) else {
            return out;
        };
        let keeper = members[0];
        for v in 0..out.vertex_count() {
            if v == keeper {
                continue;
            }
            if let Some(q) = out.priority[v].value() {
                if q >= p {
                    out.priority[v] = Priority::Value(q + 2);
                }
            }
        }
    }
}

/// Enumerates all player-0 strategies (product of successor choices).
/// Intended for desk-scale oracle checks and bound computations.
pub fn enumerate_strategies(g: &SinkParityGame) -> Vec<Strategy> {
    let p0: Vec<VertexId> = (0..g.vertex_count())
        .filter(|&v| matches!(g.owner[v], Owner::Player0))
        .collect();
    let mut out = vec![Strategy {
        choice: BTreeMap::new(),
    }];
    for &v in &p0 {
        let mut next = Vec::with_capacity(out.len() * g.succ[v].len());
        for s in &out {
            for &w in &g.succ[v] {
                let mut c = s.choice.clone();
                c.insert(v, w);
                next.push(Strategy { choice: c });
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::parity_counter::{counter_game, initial_strategy};

    #[test]
    fn g1_valuations_match_known_values() {
        let g = counter_game(1);
        let s0 = initial_strategy(&g);
        let vals = valuations(&g, &s0).unwrap();
        let a1 = g.vertex_by_name("a1").unwrap();
        let b1 = g.vertex_by_name("b1").unwrap();
        assert_eq!(vals.val[a1], ValuationMultiset::from_priorities(&[3]));
        assert_eq!(vals.val[b1], ValuationMultiset::from_priorities(&[4]));
        assert_eq!(vals.cmp(a1, b1), Ordering::Less);

        // the optimal strategy routes a1 -> b2 and collects the 6
        let b2 = g.vertex_by_name("b2").unwrap();
        let opt = apply_switch(&s0, (a1, b2));
        let vals = valuations(&g, &opt).unwrap();
        assert_eq!(vals.val[a1], ValuationMultiset::from_priorities(&[3, 6]));
        assert_eq!(vals.cmp(a1, b1), Ordering::Greater);
        assert!(vals.val[g.sink].is_empty());
    }

    #[test]
    fn counterstrategy_is_recorded_with_smallest_id_ties() {
        // the minimizer at b1 exits straight to the sink either way
        let g = counter_game(1);
        let s0 = initial_strategy(&g);
        let vals = valuations(&g, &s0).unwrap();
        let b1 = g.vertex_by_name("b1").unwrap();
        assert_eq!(vals.counter[&b1], g.sink);
        let a1 = g.vertex_by_name("a1").unwrap();
        let b2 = g.vertex_by_name("b2").unwrap();
        let opt = apply_switch(&s0, (a1, b2));
        let vals = valuations(&g, &opt).unwrap();
        assert_eq!(vals.counter[&b1], g.sink);
    }

    #[test]
    fn g1_improving_switches() {
        let g = counter_game(1);
        let s0 = initial_strategy(&g);
        let vals = valuations(&g, &s0).unwrap();
        // only (a1, b2), which carries bland number 2
        assert_eq!(improving_switches(&g, &s0, &vals), vec![2]);

        let a1 = g.vertex_by_name("a1").unwrap();
        let b2 = g.vertex_by_name("b2").unwrap();
        let opt = apply_switch(&s0, (a1, b2));
        let vals = valuations(&g, &opt).unwrap();
        assert!(improving_switches(&g, &opt, &vals).is_empty());
    }

    #[test]
    fn g2_improving_switches_at_the_start() {
        // both levels start with their rewarding branch strictly better:
        // (a1, b2) carries index 2 and (a2, b3) carries index 4
        let g = counter_game(2);
        let s0 = initial_strategy(&g);
        let vals = valuations(&g, &s0).unwrap();
        assert_eq!(improving_switches(&g, &s0, &vals), vec![2, 4]);
    }

    #[test]
    fn apply_switch_is_local() {
        let g = counter_game(2);
        let s0 = initial_strategy(&g);
        let a2 = g.vertex_by_name("a2").unwrap();
        let b3 = g.vertex_by_name("b3").unwrap();
        let s1 = apply_switch(&s0, (a2, b3));
        assert_eq!(s1.choice[&a2], b3);
        for (&v, &w) in &s0.choice {
            if v != a2 {
                assert_eq!(s1.choice[&v], w);
            }
        }
        // re-applying the current choice is a no-op
        let s2 = apply_switch(&s1, (a2, b3));
        assert_eq!(s1, s2);
    }

    #[test]
    fn admissibility_and_validation() {
        let g = counter_game(2);
        let s0 = initial_strategy(&g);
        assert!(validate_game(&g).is_empty());
        assert!(is_admissible(&g, &s0));
        // every strategy of the acyclic counter is admissible
        for s in enumerate_strategies(&g) {
            assert!(is_admissible(&g, &s));
        }
    }

    #[test]
    fn broken_games_report_violations() {
        let mut g = counter_game(1);
        // break the sink self-loop
        let a1 = g.vertex_by_name("a1").unwrap();
        g.succ[g.sink] = vec![a1];
        let errs = validate_game(&g);
        assert!(errs.iter().any(|e| e.contains("sink self-loop missing")));

        let mut g = counter_game(1);
        // duplicate a bland number by swapping one onto another edge
        let (_, e) = g.bland.iter().next().map(|(b, e)| (*b, *e)).unwrap();
        g.bland.insert(2, e);
        let errs = validate_game(&g);
        assert!(errs.iter().any(|e| e.contains("bland not bijective")));
    }

    #[test]
    fn transformation_spreads_duplicates() {
        // a 3-vertex chain with priorities (3,3,4) becomes (3,5,6)
        let mut g = counter_game(1);
        // g has priorities a1=3, b1=4, b2=6; force a duplicate
        let b1 = g.vertex_by_name("b1").unwrap();
        g.priority[b1] = Priority::Value(3);
        let tg = standard_transformation(&g);
        let mut got: Vec<i64> = tg.priority.iter().filter_map(|p| p.value()).collect();
        got.sort();
        assert_eq!(got, vec![3, 5, 6 + 2]);
        // parities preserved vertex by vertex
        for v in 0..g.vertex_count() {
            if let (Some(p), Some(q)) = (g.priority[v].value(), tg.priority[v].value()) {
                assert_eq!(p % 2, q % 2);
                assert!(q >= p);
            }
        }
    }

    #[test]
    fn transformation_is_identity_on_unique_priorities() {
        let g = counter_game(2);
        let tg = standard_transformation(&g);
        assert_eq!(g.priority, tg.priority);
    }
}
