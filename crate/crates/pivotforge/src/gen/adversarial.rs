//! The adversarial parity-game builder: given any index selector within
//! its memory budget, produce a game with exactly `m_i` player-0 edges on
//! which the induced rule needs at least `2^(m_i/(12 l_i) - 1)` iterations.
//!
//! The selector's cyclic output sequence is decomposed as clustered or
//! dispersed. Clustered: one multiplied-and-controlled binary counter per
//! interval, so any pick near an interval end lands on a copy of the
//! smallest-index improving counter edge. Dispersed: one delayed counter
//! identified with the big interval, plus decoy chains wired to the first
//! level's vertices so that picks outside the big interval burn on decoy
//! drains. Filler widgets pin every leftover rank, controllers keep the
//! improving count frozen at `m_i / 3`, and non-repeating memory prefixes
//! are absorbed by double-filler widgets. Priorities are made unique by
//! the standard transformation at the very end, and the assembled instance
//! is verified by replaying the selector's own run and checking the phase
//! structure; an instance that misses a target rank is rejected, not
//! patched.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use super::build::{EdgeRef, GameBuilder};
use super::decompose::{decompose, Certificate};
use super::gadgets::{add_controller, add_delayer, add_double_filler, add_filler};
use super::GenError;
use crate::parity::{
    improving_switches, standard_transformation, strategy_improvement, validate_game, valuations,
    Owner, SinkParityGame, Strategy, VertexId,
};
use crate::rules::{BlandId, IndexSelector, PivotRule};
use crate::trace::{TraceOptions, WatchPair};

/// A generated parity instance with its audit metadata.
#[derive(Debug, Clone)]
pub struct ParityInstance {
    pub game: SinkParityGame,
    pub initial: Strategy,
    pub meta: Value,
}

/// The selector's behavior at a frozen improving count: the rank outputs
/// until a memory state repeats, and where the repetition re-enters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleSequence {
    /// Ranks g_1..g_l' output along the unique-memory prefix.
    pub g: Vec<u64>,
    /// Memory states h_1..h_l' (all distinct).
    pub h: Vec<u64>,
    /// Re-entry point: the repeated memory state equals h_(prefix_len).
    pub prefix_len: u64,
    pub cycle_len: u64,
}

impl CycleSequence {
    /// The cycling part g_(l'')..g_(l').
    pub fn tail(&self) -> Vec<u64> {
        self.g[self.prefix_len as usize - 1..].to_vec()
    }
}

/// Iterates the selector at improving count `m_i/3` and element count
/// `m_i` until a memory state repeats.
pub fn cycle_sequence(sel: &IndexSelector, m_i: u64) -> Result<CycleSequence, GenError> {
    if m_i % 3 != 0 {
        return Err(GenError::Precondition("m_i must be divisible by 3".into()));
    }
    let k = m_i / 3;
    let mut h = vec![1u64];
    let mut g = Vec::new();
    loop {
        let cur = *h.last().unwrap();
        let (rank, next) = sel
            .select(k, m_i, cur)
            .map_err(|e| GenError::Precondition(format!("selector failed: {e}")))?;
        g.push(rank);
        if let Some(pos) = h.iter().position(|&x| x == next) {
            return Ok(CycleSequence {
                cycle_len: g.len() as u64,
                prefix_len: pos as u64 + 1,
                g,
                h,
            });
        }
        h.push(next);
        if h.len() > 1_000_000 {
            return Err(GenError::Precondition(
                "selector memory did not repeat within 10^6 states".into(),
            ));
        }
    }
}

type Class = &'static str;

/// A block's contribution: slot segments in rank order plus edge classes.
struct BlockParts {
    slots: Vec<EdgeRef>,
    classes: Vec<(EdgeRef, Class)>,
}

impl BlockParts {
    fn new() -> Self {
        Self {
            slots: Vec::new(),
            classes: Vec::new(),
        }
    }

    fn push(&mut self, e: EdgeRef, class: Class) {
        self.slots.push(e);
        self.classes.push((e, class));
    }

    fn push_filler(&mut self, b: &mut GameBuilder, sink: VertexId, tag: &str) {
        let w = add_filler(b, sink, tag);
        self.push(w.improving, "filler");
        self.push(w.others[0], "filler");
        self.push(w.others[1], "filler");
    }

    fn extend(&mut self, other: BlockParts) {
        self.slots.extend(other.slots);
        self.classes.extend(other.classes);
    }
}

/// The counter levels shared by both counter styles. With `delayed`, the
/// level vertices come back as player-1 relays to be wired into chains.
struct CounterCore {
    a: Vec<VertexId>,
    b: Vec<VertexId>,
    a1: VertexId,
    b1: VertexId,
}

fn add_counter_core(
    b: &mut GameBuilder,
    sink: VertexId,
    levels: usize,
    delayed: bool,
    tag: &str,
) -> CounterCore {
    let owner_a = if delayed { Owner::Player1 } else { Owner::Player0 };
    let a: Vec<VertexId> = (1..=levels)
        .map(|i| b.add_vertex(format!("{tag}_a{i}"), owner_a, 2 * i as i64 + 1))
        .collect();
    let mut bs: Vec<VertexId> = (1..=levels)
        .map(|i| b.add_vertex(format!("{tag}_b{i}"), Owner::Player1, 2 * i as i64 + 2))
        .collect();
    bs.push(b.add_vertex(
        format!("{tag}_b{}", levels + 1),
        Owner::Player1,
        2 * levels as i64 + 4,
    ));
    for i in 0..levels {
        let a_next = if i + 1 < levels { a[i + 1] } else { sink };
        b.add_edge(bs[i], bs[i + 1]);
        b.add_edge(bs[i], a_next);
    }
    b.add_edge(bs[levels], sink);
    CounterCore {
        a1: a[0],
        b1: bs[0],
        a,
        b: bs,
    }
}

fn wrap_with_controller(
    b: &mut GameBuilder,
    e: EdgeRef,
    tag: &str,
    gadgets: &mut Vec<(EdgeRef, EdgeRef)>,
) {
    let (src, tgt) = b.edge_endpoints(e);
    let ctl = add_controller(b, src, tgt, ("", ""), tag);
    gadgets.push((ctl.a, ctl.a_prime));
}

/// A multiplied, controlled counter: every player-0 edge becomes `copies`
/// parallel routes, each wrapped by a controller. Slot order: routes in
/// counter order, then the controller edges, then filler widgets.
fn assemble_multiplied_counter(
    b: &mut GameBuilder,
    sink: VertexId,
    levels: usize,
    copies: u64,
    fillers: u64,
    tag: &str,
) -> (BlockParts, VertexId, VertexId) {
    let core = add_counter_core(b, sink, levels, false, tag);
    let mut parts = BlockParts::new();
    let mut gadgets = Vec::new();
    for i in 0..levels {
        let a_next = if i + 1 < levels { core.a[i + 1] } else { sink };
        let b_next = core.b[i + 1];
        // relay vertices sit in the even class just above their source
        // level, so after the uniquifying transformation every nonzero
        // valuation gap at the source still clears the controller margins
        let relay_priority = 2 * (i as i64 + 1) + 2;
        for (dir, tgt) in [("a", a_next), ("bb", b_next)] {
            for c in 0..copies {
                let h = b.add_vertex(
                    format!("{tag}_h{}{}_{c}", dir, i + 1),
                    Owner::Player1,
                    relay_priority,
                );
                let route = b.add_p0_edge(core.a[i], h);
                b.add_edge(h, tgt);
                if dir == "a" && c == 0 {
                    b.choose(route);
                }
                parts.push(route, "counter");
                wrap_with_controller(b, route, &format!("{tag}_c{}{}_{c}", dir, i + 1), &mut gadgets);
            }
        }
    }
    for (a, ap) in gadgets {
        parts.push(a, "controller-a");
        parts.push(ap, "controller-aprime");
    }
    for f in 0..fillers {
        parts.push_filler(b, sink, &format!("{tag}_f{f}"));
    }
    (parts, core.a1, core.b1)
}

/// A delayed, controlled counter for the dispersed case: with `k_delay`
/// at least 1 each level's choice sits behind a chain of `k_delay + 1`
/// one-at-a-time drains; with 0 it is the plain counter. Controllers wrap
/// every choice edge either way.
fn assemble_delayed_counter(
    b: &mut GameBuilder,
    sink: VertexId,
    levels: usize,
    k_delay: u64,
    fillers: u64,
    tag: &str,
) -> (BlockParts, VertexId, VertexId) {
    let delayed = k_delay > 0;
    let core = add_counter_core(b, sink, levels, delayed, tag);
    let mut parts = BlockParts::new();
    let mut gadgets = Vec::new();
    for i in 0..levels {
        let a_next = if i + 1 < levels { core.a[i + 1] } else { sink };
        let b_next = core.b[i + 1];
        if delayed {
            // the rewarding branch is x, continuing the chain is y
            let chain = add_delayer(b, k_delay, b_next, a_next, ("", ""), &format!("{tag}_d{}", i + 1));
            b.add_edge(core.a[i], chain.entry);
            for (fam, edges) in [("l", &chain.l_edges), ("r", &chain.r_edges)] {
                for (j, &e) in edges.iter().enumerate() {
                    parts.push(e, "counter");
                    wrap_with_controller(b, e, &format!("{tag}_c{}{}{}", i + 1, fam, j), &mut gadgets);
                }
            }
        } else {
            let to_a = b.add_p0_edge(core.a[i], a_next);
            let to_b = b.add_p0_edge(core.a[i], b_next);
            b.choose(to_a);
            for (suffix, e) in [("a", to_a), ("b", to_b)] {
                parts.push(e, "counter");
                wrap_with_controller(b, e, &format!("{tag}_c{}_{suffix}", i + 1), &mut gadgets);
            }
        }
    }
    for (a, ap) in gadgets {
        parts.push(a, "controller-a");
        parts.push(ap, "controller-aprime");
    }
    for f in 0..fillers {
        parts.push_filler(b, sink, &format!("{tag}_f{f}"));
    }
    (parts, core.a1, core.b1)
}

/// A decoy block for a dispersed interval: one drain per scheduled pick,
/// each pinned to its target in-block rank. Drain-step pairs that share a
/// rank form one group; within a group the draining member always ranks
/// first, so the rank equals the number of inventory units below the group
/// plus one, independent of drain direction and time.
fn assemble_decoy(
    b: &mut GameBuilder,
    sink: VertexId,
    q: u64,
    target_ranks: &[u64],
    pre_flip_drains: u64,
    x: VertexId,
    y: VertexId,
    tag: &str,
) -> Result<BlockParts, GenError> {
    let steps = target_ranks.len() as u64;
    assert!(steps >= 1);
    let budget = q + 1;
    let fillers_total = budget
        .checked_sub(2 * steps)
        .ok_or_else(|| GenError::Construction("decoy interval narrower than its drains".into()))?;

    // drain chain: a direct two-edge vertex for one step, a delayer
    // otherwise, partially drained so the first pass lines up
    let (l_edges, r_edges) = if steps == 1 {
        let v = b.add_vertex(format!("{tag}_v"), Owner::Player0, 1);
        let to_x = b.add_p0_edge(v, x);
        let to_y = b.add_p0_edge(v, y);
        if pre_flip_drains > 0 {
            b.choose(to_y);
        } else {
            b.choose(to_x);
        }
        (vec![to_x], vec![to_y])
    } else {
        let k = steps as usize - 1;
        let a = pre_flip_drains as usize;
        assert!(a <= k + 1);
        let chain = add_delayer(b, k as u64, x, y, ("", ""), tag);
        for j in 0..=(k - a) {
            b.choose(chain.l_edges[j]);
        }
        (chain.l_edges, chain.r_edges)
    };

    // group the l/r pair of every step by its target rank
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (s, &rank) in target_ranks.iter().enumerate() {
        if rank < 1 || rank > budget {
            return Err(GenError::Construction(format!(
                "decoy target rank {rank} is outside 1..={budget}"
            )));
        }
        groups.entry(rank).or_default().push(s);
    }

    let mut parts = BlockParts::new();
    let mut units_below = 0u64;
    let mut fillers_used = 0u64;
    let mut filler_idx = 0;
    for (&rank, members) in &groups {
        let pad = (rank - 1).checked_sub(units_below).ok_or_else(|| {
            GenError::Construction(format!(
                "decoy drain ranks cannot be realized: rank {rank} collides with earlier units"
            ))
        })?;
        if fillers_used + pad > fillers_total {
            return Err(GenError::Construction(
                "decoy drain ranks cannot be realized: not enough filler slack".into(),
            ));
        }
        for _ in 0..pad {
            parts.push_filler(b, sink, &format!("{tag}_f{filler_idx}"));
            filler_idx += 1;
        }
        fillers_used += pad;
        units_below += pad;
        let originals: Vec<EdgeRef> = members
            .iter()
            .flat_map(|&s| [l_edges[s], r_edges[s]])
            .collect();
        let mut gadgets = Vec::new();
        for (gi, &e) in originals.iter().enumerate() {
            wrap_with_controller(b, e, &format!("{tag}_g{rank}_{gi}"), &mut gadgets);
        }
        for &e in &originals {
            parts.push(e, "decoy");
        }
        for (a, ap) in gadgets {
            parts.push(a, "controller-a");
            parts.push(ap, "controller-aprime");
        }
        units_below += 2 * members.len() as u64;
    }
    for _ in fillers_used..fillers_total {
        parts.push_filler(b, sink, &format!("{tag}_f{filler_idx}"));
        filler_idx += 1;
    }
    Ok(parts)
}

/// Moves the edge with Bland number `from` to Bland position `to`
/// (1-based), shifting everything in between.
fn move_bland_slot(game: &mut SinkParityGame, from: BlandId, to: u64) {
    let edges: Vec<(VertexId, VertexId)> = game.bland.values().copied().collect();
    let moved = edges[from as usize - 1];
    let mut order: Vec<(VertexId, VertexId)> = edges
        .iter()
        .enumerate()
        .filter(|(i, _)| *i as u64 + 1 != from)
        .map(|(_, e)| *e)
        .collect();
    order.insert(to as usize - 1, moved);
    game.bland = order
        .into_iter()
        .enumerate()
        .map(|(i, e)| (i as u64 + 1, e))
        .collect();
}

/// Builds the adversarial game for a selector. The returned metadata
/// records the certificate, the cycle data, the per-edge classes, the
/// iteration bound, and the watched first-level vertices.
pub fn build_adversarial_parity(
    sel: &IndexSelector,
    m_i: u64,
    l_i: u64,
) -> Result<ParityInstance, GenError> {
    if m_i % 3 != 0 {
        return Err(GenError::Precondition("m_i must be divisible by 3".into()));
    }
    if m_i < 12 * l_i {
        return Err(GenError::Precondition("need m_i >= 12 * l_i".into()));
    }
    if sel.memory_bound() > l_i {
        return Err(GenError::Precondition(format!(
            "selector uses {} memory states, budget is {l_i}",
            sel.memory_bound()
        )));
    }
    let cs = cycle_sequence(sel, m_i)?;
    let m = m_i / 3;
    let tail = cs.tail();
    let cert = decompose(&tail, m, l_i)?;
    let d = m / (2 * l_i);
    let levels = (d / 2) as usize;
    if levels == 0 {
        return Err(GenError::Construction("counter would have no levels".into()));
    }
    let prefix = cs.prefix_len as usize - 1;

    let mut b = GameBuilder::new();
    let sink = b.add_sink("T");
    let mut all = BlockParts::new();
    let mut named: BTreeMap<String, String> = BTreeMap::new();

    // standalone fillers are pushed per uncovered rank; the last 2*prefix
    // of them are donors whose slots host a double-filler widget instead
    let covered: u64 = match &cert {
        Certificate::Clustered(c) => c.intervals.iter().map(|&(_, q)| q + 1).sum(),
        Certificate::Dispersed(dc) => {
            dc.xi + 1 + dc.intervals.iter().map(|&(_, q)| q + 1).sum::<u64>()
        }
    };
    let standalone_total = m - covered;
    if (standalone_total as usize) < 2 * prefix {
        return Err(GenError::Construction(format!(
            "prefix of {prefix} needs {} spare fillers, found {standalone_total}",
            2 * prefix
        )));
    }
    let donor_start = standalone_total - 2 * prefix as u64;
    let mut standalone_idx = 0u64;
    let mut pending_widget: Option<super::gadgets::DoubleFillerEdges> = None;
    let mut park_slots: Vec<(usize, EdgeRef)> = Vec::new(); // (prefix step j, a1 edge)
    let push_standalone = |b: &mut GameBuilder,
                               all: &mut BlockParts,
                               standalone_idx: &mut u64,
                               pending: &mut Option<super::gadgets::DoubleFillerEdges>,
                               parks: &mut Vec<(usize, EdgeRef)>| {
        let i = *standalone_idx;
        *standalone_idx += 1;
        if i < donor_start {
            all.push_filler(b, sink, &format!("sf{i}"));
            return;
        }
        // donors pair up; widget j = 1 takes the lowest pair
        let offset = i - donor_start;
        let j = (offset / 2) as usize + 1;
        if offset % 2 == 0 {
            let w = add_double_filler(b, sink, &format!("pw{j}"));
            all.push(w.a2, "widget-other");
            all.push(w.a1, "widget-a1");
            all.push(w.b1, "widget-other");
            parks.push((j, w.a1));
            *pending = Some(w);
        } else {
            let w = pending.take().expect("donor pairs alternate");
            all.push(w.b2, "widget-other");
            all.push(w.b3, "widget-other");
            all.push(w.a3, "widget-other");
        }
    };

    match &cert {
        Certificate::Clustered(c) => {
            let mut intervals = c.intervals.clone();
            intervals.sort();
            let mut rank = 1u64;
            for (ci, &(p, q)) in intervals.iter().enumerate() {
                while rank < p {
                    push_standalone(&mut b, &mut all, &mut standalone_idx, &mut pending_widget, &mut park_slots);
                    rank += 1;
                }
                let hits: Vec<u64> = tail.iter().copied().filter(|&v| v >= p && v <= p + q).collect();
                let front_span = hits.iter().max().unwrap() - p + 1;
                let back_span = p + q - hits.iter().min().unwrap() + 1;
                let copies = (q + 1) / d;
                let reversed = front_span > copies;
                if reversed && back_span > copies {
                    return Err(GenError::Construction(
                        "interval admits neither orientation".into(),
                    ));
                }
                let block_edges = 2 * levels as u64 * copies;
                let fillers = (q + 1).checked_sub(block_edges).ok_or_else(|| {
                    GenError::Construction("counter overflows its interval".into())
                })?;
                let (mut parts, a1, b1) =
                    assemble_multiplied_counter(&mut b, sink, levels, copies, fillers, &format!("k{ci}"));
                if reversed {
                    parts.slots.reverse();
                }
                if ci == 0 {
                    named.insert("a1".into(), b.vertex_name(a1).to_string());
                    named.insert("b1".into(), b.vertex_name(b1).to_string());
                }
                all.extend(parts);
                rank = p + q + 1;
            }
            while rank <= m {
                push_standalone(&mut b, &mut all, &mut standalone_idx, &mut pending_widget, &mut park_slots);
                rank += 1;
            }
        }
        Certificate::Dispersed(dc) => {
            let k_val = *tail
                .iter()
                .find(|&&v| v >= dc.psi && v <= dc.psi + dc.xi)
                .ok_or_else(|| GenError::Construction("big interval holds no picks".into()))?;
            let k_count = tail.iter().filter(|&&v| v == k_val).count() as u64;
            let phi = tail.iter().rposition(|&v| v == k_val).unwrap();

            let main_fillers = (dc.xi + 1)
                .checked_sub(2 * levels as u64 * k_count)
                .ok_or_else(|| GenError::Construction("counter overflows the big interval".into()))?;
            let (mut main_parts, a1, b1) =
                assemble_delayed_counter(&mut b, sink, levels, k_count - 1, main_fillers, "mc");
            if k_val == dc.psi + dc.xi {
                main_parts.slots.reverse();
            }
            named.insert("a1".into(), b.vertex_name(a1).to_string());
            named.insert("b1".into(), b.vertex_name(b1).to_string());

            // the schedule between flips starts right after the last main
            // counter drain of the cycle
            let mut reordered: Vec<u64> = tail[phi + 1..].to_vec();
            reordered.extend_from_slice(&tail[..=phi]);

            let mut segments: Vec<(u64, u64, BlockParts)> = vec![(dc.psi, dc.xi, main_parts)];
            for (di, &(p, q)) in dc.intervals.iter().enumerate() {
                let targets: Vec<u64> = reordered
                    .iter()
                    .copied()
                    .filter(|&v| v >= p && v <= p + q)
                    .map(|v| v - p + 1)
                    .collect();
                if targets.is_empty() {
                    let mut parts = BlockParts::new();
                    for f in 0..=q {
                        parts.push_filler(&mut b, sink, &format!("ud{di}_{f}"));
                    }
                    segments.push((p, q, parts));
                    continue;
                }
                let pre_flip =
                    tail[..=phi].iter().filter(|&&v| v >= p && v <= p + q).count() as u64;
                let parts =
                    assemble_decoy(&mut b, sink, q, &targets, pre_flip, b1, a1, &format!("dc{di}"))?;
                segments.push((p, q, parts));
            }
            segments.sort_by_key(|(p, _, _)| *p);
            let mut rank = 1u64;
            for (p, q, parts) in segments {
                while rank < p {
                    push_standalone(&mut b, &mut all, &mut standalone_idx, &mut pending_widget, &mut park_slots);
                    rank += 1;
                }
                all.extend(parts);
                rank = p + q + 1;
            }
            while rank <= m {
                push_standalone(&mut b, &mut all, &mut standalone_idx, &mut pending_widget, &mut park_slots);
                rank += 1;
            }
        }
    }
    assert_eq!(standalone_idx, standalone_total);
    assert_eq!(all.slots.len() as u64, m_i, "slot list must cover m_i edges");
    assert_eq!(park_slots.len(), prefix);

    // resolve edge classes by endpoints before any renumbering
    let class_of_ref: BTreeMap<EdgeRef, Class> = all.classes.iter().copied().collect();
    let endpoint_classes: Vec<((VertexId, VertexId), Class)> = all
        .slots
        .iter()
        .map(|e| (b.edge_endpoints(*e), class_of_ref[e]))
        .collect();
    let (game, initial) = b.finish(&all.slots);
    let mut game = standard_transformation(&game);
    let class_by_edge: BTreeMap<(VertexId, VertexId), Class> =
        endpoint_classes.into_iter().collect();

    // place each prefix widget's one-shot edge so it is the g_j-th
    // improving move when its step comes, last step first
    for j in (1..=prefix).rev() {
        let g_j = cs.g[j - 1];
        let src = game
            .vertex_by_name(&format!("pw{j}_x"))
            .expect("widget vertex exists");
        let a1_edge = game.bland_of(src, game.sink).expect("one-shot edge exists");
        let vals = valuations(&game, &initial)
            .map_err(|e| GenError::Construction(format!("prefix placement needs valuations: {e}")))?;
        let improving = improving_switches(&game, &initial, &vals);
        let others: Vec<BlandId> = improving.into_iter().filter(|&x| x != a1_edge).collect();
        if g_j as usize > others.len() + 1 {
            return Err(GenError::Construction(format!(
                "prefix pick {g_j} exceeds the improving count"
            )));
        }
        let to = if g_j == 1 {
            1
        } else {
            let anchor = others[g_j as usize - 2];
            if anchor > a1_edge {
                anchor
            } else {
                anchor + 1
            }
        };
        move_bland_slot(&mut game, a1_edge, to);
    }

    let errs = validate_game(&game);
    if !errs.is_empty() {
        return Err(GenError::Construction(format!("assembled game invalid: {errs:?}")));
    }
    let vals = valuations(&game, &initial)
        .map_err(|e| GenError::Construction(format!("initial valuation failed: {e}")))?;
    let count = improving_switches(&game, &initial, &vals).len() as u64;
    if count != m {
        return Err(GenError::Construction(format!(
            "improving count at the start is {count}, expected {m}"
        )));
    }

    let bound = iteration_bound(m_i, l_i);
    let edge_classes: BTreeMap<String, String> = game
        .bland
        .iter()
        .map(|(&bl, e)| {
            (
                bl.to_string(),
                class_by_edge
                    .get(e)
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "unclassified".into()),
            )
        })
        .collect();
    let initial_strategy: BTreeMap<String, String> = initial
        .choice
        .iter()
        .map(|(&v, &w)| (game.names[v].clone(), game.names[w].clone()))
        .collect();
    let meta = json!({
        "family": "parity-adversarial",
        "m_i": m_i,
        "l_i": l_i,
        "bound": bound,
        "selector": sel,
        "certificate": cert,
        "cycle": {"g": cs.g, "prefix_len": cs.prefix_len, "cycle_len": cs.cycle_len},
        "edge_classes": edge_classes,
        "named": named,
        "initial_strategy": initial_strategy,
    });
    let instance = ParityInstance { game, initial, meta };
    verify_instance(&instance, sel, m_i, bound)?;
    Ok(instance)
}

/// `ceil(2^(m_i/(12 l_i) - 1))`, exact for the integral exponents the
/// acceptance criteria use.
pub fn iteration_bound(m_i: u64, l_i: u64) -> u64 {
    let num = m_i;
    let den = 12 * l_i;
    if num % den == 0 {
        1u64 << (num / den - 1)
    } else {
        (2f64.powf(num as f64 / den as f64 - 1.0)).ceil() as u64
    }
}

/// Replays the selector's own run and checks the phase structure: every
/// switch up to the bound is a counter drain, a decoy drain or a one-shot
/// prefix edge, with the improving count frozen at `m_i/3`.
fn verify_instance(
    inst: &ParityInstance,
    sel: &IndexSelector,
    m_i: u64,
    bound: u64,
) -> Result<(), GenError> {
    let rule = PivotRule::index_based(sel.clone());
    let mut opts = TraceOptions::with_cap(200_000);
    if let (Some(a1), Some(b1)) = (
        inst.meta.pointer("/named/a1").and_then(|v| v.as_str()),
        inst.meta.pointer("/named/b1").and_then(|v| v.as_str()),
    ) {
        opts.watch_pairs.push(WatchPair {
            label: "alternation".into(),
            first: a1.to_string(),
            second: b1.to_string(),
        });
    }
    let (trace, _) = strategy_improvement(&inst.game, &inst.initial, &rule, &opts)
        .map_err(|e| GenError::Construction(format!("verification run failed: {e}")))?;
    if !trace.reached_optimum() {
        return Err(GenError::Construction("verification run hit the cap".into()));
    }
    if trace.iterations < bound {
        return Err(GenError::Construction(format!(
            "run took {} iterations, bound is {bound}",
            trace.iterations
        )));
    }
    let classes = inst
        .meta
        .pointer("/edge_classes")
        .and_then(|v| v.as_object())
        .expect("edge classes recorded");
    let phase_classes: BTreeSet<&str> = ["counter", "decoy", "widget-a1"].into();
    let mut phase_len = 0u64;
    for row in &trace.rows {
        let cls = classes
            .get(&row.chosen.to_string())
            .and_then(|v| v.as_str())
            .unwrap_or("unclassified");
        if !phase_classes.contains(cls) {
            break;
        }
        phase_len += 1;
        if row.improving.len() as u64 != m_i / 3 {
            return Err(GenError::Construction(format!(
                "improving count {} at phase iteration {} (want {})",
                row.improving.len(),
                row.iteration,
                m_i / 3
            )));
        }
    }
    if phase_len < bound {
        return Err(GenError::Construction(format!(
            "counting phase lasted {phase_len} iterations, bound is {bound}"
        )));
    }
    Ok(())
}
