//! The five parity-game gadgets: multiplier, controller, filler, delayer,
//! and double filler.
//!
//! Each gadget exists in two layers: a low-level primitive that adds the
//! widget's vertices and edges to a `GameBuilder` (used by the adversarial
//! assembler, which owns the global Bland slot order), and a standalone
//! operation on a finished `(game, strategy)` pair that splices the widget
//! in at a requested Bland position.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::build::{EdgeRef, GameBuilder};
use super::GenError;
use crate::parity::{Owner, SinkParityGame, Strategy, VertexId};
use crate::rules::BlandId;

/// Edge as a pair of vertex names; stable under Bland renumbering.
pub type NamedEdge = (String, String);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerInfo {
    /// The wrapped player-0 edge (x, y).
    pub wrapped: NamedEdge,
    /// The gadget's own player-0 vertex.
    pub owner_vertex: String,
    /// Initially chosen edge into the mirror chain.
    pub a: NamedEdge,
    /// The complementary switch back to x.
    pub a_prime: NamedEdge,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FillerInfo {
    /// The one edge that is improving until taken.
    pub improving: NamedEdge,
    pub others: Vec<NamedEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayerInfo {
    /// The vertex that was demoted to player 1 and wired into the chain.
    pub vertex: String,
    pub x: String,
    pub y: String,
    pub k: u64,
    /// Leftward edges l_0..l_k (l_0 leaves z_1 toward x's exit).
    pub l_edges: Vec<NamedEdge>,
    /// Rightward edges r_0..r_k (r_0 leaves z_{k+1} toward y's exit).
    pub r_edges: Vec<NamedEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoubleFillerInfo {
    /// Consumed by exactly one rule output during the prefix phase.
    pub a1: NamedEdge,
    pub a2: NamedEdge,
    pub a3: NamedEdge,
    pub b1: NamedEdge,
    pub b2: NamedEdge,
    pub b3: NamedEdge,
}

pub struct ControllerEdges {
    pub a: EdgeRef,
    pub a_prime: EdgeRef,
    pub info: ControllerInfo,
}

pub struct FillerEdges {
    pub improving: EdgeRef,
    pub others: [EdgeRef; 2],
    pub info: FillerInfo,
}

pub struct DelayerEdges {
    pub entry: VertexId,
    pub l_edges: Vec<EdgeRef>,
    pub r_edges: Vec<EdgeRef>,
    pub info: DelayerInfo,
}

pub struct DoubleFillerEdges {
    pub a1: EdgeRef,
    pub a2: EdgeRef,
    pub a3: EdgeRef,
    pub b1: EdgeRef,
    pub b2: EdgeRef,
    pub b3: EdgeRef,
    pub info: DoubleFillerInfo,
}

/// Wraps the player-0 edge `(x, y)` with a controller: a fresh player-0
/// vertex choosing between a mirror chain to `y` (edge `a`, initial) and a
/// direct edge to `x` (edge `a'`). While `a` is chosen, exactly one of
/// `(x, y)` and `a'` is improving.
pub fn add_controller(
    b: &mut GameBuilder,
    x: VertexId,
    y: VertexId,
    names: (&str, &str),
    tag: &str,
) -> ControllerEdges {
    let px = b.priority_of(x);
    let g = b.add_vertex(format!("{tag}_g"), Owner::Player0, 1);
    let cz = b.add_vertex(format!("{tag}_z"), Owner::Player1, px);
    let cw = b.add_vertex(format!("{tag}_w"), Owner::Player1, 1);
    let a = b.add_p0_edge(g, cz);
    let a_prime = b.add_p0_edge(g, x);
    b.choose(a);
    b.add_edge(cz, cw);
    b.add_edge(cw, y);
    let info = ControllerInfo {
        wrapped: (names.0.to_string(), names.1.to_string()),
        owner_vertex: format!("{tag}_g"),
        a: (format!("{tag}_g"), format!("{tag}_z")),
        a_prime: (format!("{tag}_g"), names.0.to_string()),
    };
    ControllerEdges { a, a_prime, info }
}

/// Adds the three-edge filler widget: priorities 3 and 2, both initially
/// pointing at the sink; the 3-to-2 edge is improving exactly until taken.
pub fn add_filler(b: &mut GameBuilder, sink: VertexId, tag: &str) -> FillerEdges {
    let y3 = b.add_vertex(format!("{tag}_y"), Owner::Player0, 3);
    let x2 = b.add_vertex(format!("{tag}_x"), Owner::Player0, 2);
    let y_to_sink = b.add_p0_edge(y3, sink);
    let improving = b.add_p0_edge(y3, x2);
    let x_to_sink = b.add_p0_edge(x2, sink);
    b.choose(y_to_sink);
    b.choose(x_to_sink);
    let info = FillerInfo {
        improving: (format!("{tag}_y"), format!("{tag}_x")),
        others: vec![
            (format!("{tag}_y"), "T".to_string()),
            (format!("{tag}_x"), "T".to_string()),
        ],
    };
    FillerEdges {
        improving,
        others: [y_to_sink, x_to_sink],
        info,
    }
}

/// Adds the delayer chain `z_1..z_{k+1}` (priority 1) with its two
/// priority-2 player-1 exits toward `x` and `y`. The caller wires some
/// vertex to the returned entry `z_1`. The initial strategy takes the
/// rightward edges, leaving via `y`'s exit.
pub fn add_delayer(
    b: &mut GameBuilder,
    k: u64,
    x: VertexId,
    y: VertexId,
    names: (&str, &str),
    tag: &str,
) -> DelayerEdges {
    let k = k as usize;
    let zs: Vec<VertexId> = (1..=k + 1)
        .map(|i| b.add_vertex(format!("{tag}_z{i}"), Owner::Player0, 1))
        .collect();
    let d_l = b.add_vertex(format!("{tag}_dl"), Owner::Player1, 2);
    let d_r = b.add_vertex(format!("{tag}_dr"), Owner::Player1, 2);
    let zname = |i: usize| format!("{tag}_z{}", i + 1);

    // l_0 leaves z_1 into the left exit; l_j walks z_{j+1} -> z_j
    let mut l_edges = Vec::with_capacity(k + 1);
    let mut l_named = Vec::with_capacity(k + 1);
    l_edges.push(b.add_p0_edge(zs[0], d_l));
    l_named.push((zname(0), format!("{tag}_dl")));
    for j in 1..=k {
        l_edges.push(b.add_p0_edge(zs[j], zs[j - 1]));
        l_named.push((zname(j), zname(j - 1)));
    }
    // r_0 leaves z_{k+1} into the right exit; r_j walks z_{k+1-j} -> z_{k+2-j}
    let mut r_edges = Vec::with_capacity(k + 1);
    let mut r_named = Vec::with_capacity(k + 1);
    r_edges.push(b.add_p0_edge(zs[k], d_r));
    r_named.push((zname(k), format!("{tag}_dr")));
    for j in 1..=k {
        r_edges.push(b.add_p0_edge(zs[k - j], zs[k - j + 1]));
        r_named.push((zname(k - j), zname(k - j + 1)));
    }
    // player-1 exits: each can dive back across the chain or leave
    b.add_edge(d_l, zs[k]);
    b.add_edge(d_l, x);
    b.add_edge(d_r, zs[0]);
    b.add_edge(d_r, y);
    // initial strategy: rightward, equivalent to choosing y
    for e in &r_edges {
        b.choose(*e);
    }
    let info = DelayerInfo {
        vertex: String::new(),
        x: names.0.to_string(),
        y: names.1.to_string(),
        k: k as u64,
        l_edges: l_named,
        r_edges: r_named,
    };
    DelayerEdges {
        entry: zs[0],
        l_edges,
        r_edges,
        info,
    }
}

/// Adds the double-filler widget: two fillers' worth of player-0 edges
/// where edge `a1` is improving exactly once, early, and the widget then
/// behaves like two ordinary fillers.
pub fn add_double_filler(b: &mut GameBuilder, sink: VertexId, tag: &str) -> DoubleFillerEdges {
    let y = b.add_vertex(format!("{tag}_y"), Owner::Player0, 1);
    let x = b.add_vertex(format!("{tag}_x"), Owner::Player0, 2);
    let w = b.add_vertex(format!("{tag}_w"), Owner::Player0, 1);
    let z = b.add_vertex(format!("{tag}_zz"), Owner::Player1, 3);
    let a1 = b.add_p0_edge(x, sink);
    let a2 = b.add_p0_edge(y, x);
    let a3 = b.add_p0_edge(y, sink);
    let b1 = b.add_p0_edge(x, z);
    let b2 = b.add_p0_edge(w, x);
    let b3 = b.add_p0_edge(w, z);
    b.add_edge(z, sink);
    b.choose(a3);
    b.choose(b1);
    b.choose(b3);
    let n = |s: &str| format!("{tag}_{s}");
    let info = DoubleFillerInfo {
        a1: (n("x"), "T".to_string()),
        a2: (n("y"), n("x")),
        a3: (n("y"), "T".to_string()),
        b1: (n("x"), n("zz")),
        b2: (n("w"), n("x")),
        b3: (n("w"), n("zz")),
    };
    DoubleFillerEdges {
        a1,
        a2,
        a3,
        b1,
        b2,
        b3,
        info,
    }
}

/// Rebuilds a finished game into a builder, returning the edge refs in
/// Bland order so splicing operations can manipulate the slot list.
/// Player-0 edges listed in `skip` are left out entirely, as is every edge
/// of a vertex named in `demote_to_p1` (which comes back as a player-1
/// vertex with no successors yet).
pub fn builder_from_game_filtered(
    g: &SinkParityGame,
    s: &Strategy,
    skip: &[(VertexId, VertexId)],
    demote_to_p1: Option<VertexId>,
) -> (GameBuilder, Vec<EdgeRef>, Vec<VertexId>) {
    let mut b = GameBuilder::new();
    let mut map = Vec::with_capacity(g.vertex_count());
    for v in 0..g.vertex_count() {
        let owner = if demote_to_p1 == Some(v) {
            Owner::Player1
        } else {
            g.owner[v]
        };
        let nv = match owner {
            Owner::Sink => b.add_sink(g.names[v].clone()),
            owner => b.add_vertex(
                g.names[v].clone(),
                owner,
                g.priority[v].value().expect("non-sink priority"),
            ),
        };
        map.push(nv);
    }
    let mut slot_order = Vec::with_capacity(g.bland.len());
    let mut edge_refs: BTreeMap<(VertexId, VertexId), EdgeRef> = BTreeMap::new();
    for v in 0..g.vertex_count() {
        if demote_to_p1 == Some(v) {
            continue;
        }
        for &w in &g.succ[v] {
            if skip.contains(&(v, w)) {
                continue;
            }
            match g.owner[v] {
                Owner::Player0 => {
                    let e = b.add_p0_edge(map[v], map[w]);
                    edge_refs.insert((v, w), e);
                }
                Owner::Player1 => b.add_edge(map[v], map[w]),
                Owner::Sink => {}
            }
        }
    }
    for (_, &(src, tgt)) in &g.bland {
        if let Some(&e) = edge_refs.get(&(src, tgt)) {
            slot_order.push(e);
        }
    }
    for (&v, &w) in &s.choice {
        if let Some(&e) = edge_refs.get(&(v, w)) {
            b.choose(e);
        }
    }
    (b, slot_order, map)
}

pub fn builder_from_game(
    g: &SinkParityGame,
    s: &Strategy,
) -> (GameBuilder, Vec<EdgeRef>, Vec<VertexId>) {
    builder_from_game_filtered(g, s, &[], None)
}

fn fresh_tag(g: &SinkParityGame, prefix: &str) -> String {
    format!("{prefix}{}", g.vertex_count())
}

/// Replaces the player-0 edge with Bland number `edge` by `copies`
/// parallel two-hop routes through fresh priority-0 player-1 vertices. The
/// new edges take over the replaced edge's Bland slot as a contiguous
/// block.
pub fn gadget_multiplier(
    g: &SinkParityGame,
    s: &Strategy,
    edge: BlandId,
    copies: u64,
) -> Result<(SinkParityGame, Strategy), GenError> {
    if copies < 1 {
        return Err(GenError::Precondition("copies must be at least 1".into()));
    }
    let (src, tgt) = g
        .edge_of_bland(edge)
        .ok_or_else(|| GenError::Precondition(format!("no player-0 edge with bland {edge}")))?;
    let tag = fresh_tag(g, "mul");
    let (mut b, slots, map) = builder_from_game_filtered(g, s, &[(src, tgt)], None);
    let mut routes = Vec::with_capacity(copies as usize);
    for c in 0..copies {
        let h = b.add_vertex(format!("{tag}_h{c}"), Owner::Player1, 0);
        let e = b.add_p0_edge(map[src], h);
        b.add_edge(h, map[tgt]);
        routes.push(e);
    }
    if s.choice.get(&src) == Some(&tgt) {
        b.choose(routes[0]);
    }
    // the replaced edge's slot hosts the copies, in route order
    let mut order: Vec<EdgeRef> = slots;
    let at = (edge as usize - 1).min(order.len());
    order.splice(at..at, routes.iter().copied());
    let (game, strategy) = b.finish(&order);
    Ok((game, strategy))
}

fn min_reachable_priority(g: &SinkParityGame, from: VertexId) -> Option<i64> {
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![from];
    let mut min_p = None;
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if let Some(p) = g.priority[v].value() {
            min_p = Some(min_p.map_or(p, |m: i64| m.min(p)));
        }
        for &w in &g.succ[v] {
            stack.push(w);
        }
    }
    min_p
}

/// Wraps a player-0 edge with the controller gadget. Requires that no
/// priority below 2 is reachable from the edge's source. The two new
/// player-0 edges are appended above all existing Bland numbers, `a`
/// before `a'`.
pub fn gadget_controller(
    g: &SinkParityGame,
    s: &Strategy,
    edge: BlandId,
) -> Result<(SinkParityGame, Strategy, ControllerInfo), GenError> {
    let (src, tgt) = g
        .edge_of_bland(edge)
        .ok_or_else(|| GenError::Precondition(format!("no player-0 edge with bland {edge}")))?;
    match min_reachable_priority(g, src) {
        Some(p) if p >= 2 => {}
        other => {
            return Err(GenError::Precondition(format!(
                "controller needs minimum reachable priority 2 from {}, found {:?}",
                g.names[src], other
            )))
        }
    }
    let tag = fresh_tag(g, "ctl");
    let (mut b, mut slots, map) = builder_from_game(g, s);
    let edges = add_controller(
        &mut b,
        map[src],
        map[tgt],
        (&g.names[src], &g.names[tgt]),
        &tag,
    );
    slots.push(edges.a);
    slots.push(edges.a_prime);
    let (game, strategy) = b.finish(&slots);
    Ok((game, strategy, edges.info))
}

/// Inserts a filler widget whose improving edge lands at Bland position
/// `position` (1-based); existing numbers at or above it shift by the
/// widget's three edges.
pub fn gadget_filler(
    g: &SinkParityGame,
    s: &Strategy,
    position: u64,
) -> Result<(SinkParityGame, Strategy, FillerInfo), GenError> {
    let m = g.player0_edge_count() as u64;
    if position < 1 || position > m + 1 {
        return Err(GenError::Precondition(format!(
            "filler position {position} outside 1..={}",
            m + 1
        )));
    }
    let tag = fresh_tag(g, "fil");
    let (mut b, mut slots, _map) = builder_from_game(g, s);
    let sink = g.sink;
    let edges = add_filler(&mut b, sink, &tag);
    let at = position as usize - 1;
    slots.splice(
        at..at,
        [edges.improving, edges.others[0], edges.others[1]],
    );
    let (game, strategy) = b.finish(&slots);
    Ok((game, strategy, edges.info))
}

/// Replaces the choice at a player-0 `vertex` (which must have exactly the
/// two successors `x` and `y`) by a delayer chain of length `k+1`: the
/// vertex becomes player 1 with a single edge into the chain, and flipping
/// which of `x`/`y` is better takes `k+1` internal switches to follow.
pub fn gadget_delayer(
    g: &SinkParityGame,
    s: &Strategy,
    vertex: &str,
    k: u64,
    x: &str,
    y: &str,
) -> Result<(SinkParityGame, Strategy, DelayerInfo), GenError> {
    if k < 1 {
        return Err(GenError::Precondition("delayer needs k >= 1".into()));
    }
    let v = g
        .vertex_by_name(vertex)
        .ok_or_else(|| GenError::Precondition(format!("unknown vertex {vertex}")))?;
    let xv = g
        .vertex_by_name(x)
        .ok_or_else(|| GenError::Precondition(format!("unknown vertex {x}")))?;
    let yv = g
        .vertex_by_name(y)
        .ok_or_else(|| GenError::Precondition(format!("unknown vertex {y}")))?;
    if !matches!(g.owner[v], Owner::Player0) {
        return Err(GenError::Precondition(format!("{vertex} is not player 0")));
    }
    let succs: std::collections::BTreeSet<VertexId> = g.succ[v].iter().copied().collect();
    if succs != [xv, yv].iter().copied().collect() {
        return Err(GenError::Precondition(format!(
            "{vertex} must have exactly the successors {x} and {y}"
        )));
    }
    let tag = fresh_tag(g, "dly");
    // the chain's edges take over the slot where the vertex's lowest Bland
    // number sat, l-family then r-family
    let first_slot = g
        .bland
        .iter()
        .filter(|(_, &(s0, _))| s0 == v)
        .map(|(&b, _)| b)
        .min()
        .expect("player-0 vertex has bland slots");
    let removed_below = g
        .bland
        .iter()
        .filter(|(&b, &(s0, _))| s0 == v && b < first_slot)
        .count();
    debug_assert_eq!(removed_below, 0);
    let slots_below = first_slot as usize - 1
        - g.bland
            .range(..first_slot)
            .filter(|(_, &(s0, _))| s0 == v)
            .count();
    let (mut b, slots, map) = builder_from_game_filtered(g, s, &[], Some(v));
    let edges = add_delayer(&mut b, k, map[xv], map[yv], (x, y), &tag);
    b.add_edge(map[v], edges.entry);
    let mut order: Vec<EdgeRef> = slots;
    let mut block = edges.l_edges.clone();
    block.extend(edges.r_edges.iter().copied());
    let at = slots_below.min(order.len());
    order.splice(at..at, block);
    let (game, strategy) = b.finish(&order);
    let mut info = edges.info;
    info.vertex = vertex.to_string();
    Ok((game, strategy, info))
}

/// Inserts a double-filler widget: three edges at `slot_a` (a2, a3, b1),
/// two at `slot_b` (b2, b3), and the one-shot edge `a1` at `a1_position`.
/// Positions are 1-based Bland positions taken in the pre-insertion
/// numbering, applied from the highest down.
pub fn gadget_double_filler(
    g: &SinkParityGame,
    s: &Strategy,
    slot_a: u64,
    slot_b: u64,
    a1_position: u64,
) -> Result<(SinkParityGame, Strategy, DoubleFillerInfo), GenError> {
    let m = g.player0_edge_count() as u64;
    for pos in [slot_a, slot_b, a1_position] {
        if pos < 1 || pos > m + 1 {
            return Err(GenError::Precondition(format!(
                "double-filler position {pos} outside 1..={}",
                m + 1
            )));
        }
    }
    let tag = fresh_tag(g, "dbl");
    let (mut b, slots, _map) = builder_from_game(g, s);
    let edges = add_double_filler(&mut b, g.sink, &tag);
    let mut order = slots;
    let mut inserts: Vec<(u64, Vec<EdgeRef>)> = vec![
        (slot_a, vec![edges.a2, edges.a3, edges.b1]),
        (slot_b, vec![edges.b2, edges.b3]),
        (a1_position, vec![edges.a1]),
    ];
    inserts.sort_by(|a, b| b.0.cmp(&a.0));
    for (pos, block) in inserts {
        let at = (pos as usize - 1).min(order.len());
        order.splice(at..at, block);
    }
    let (game, strategy) = b.finish(&order);
    Ok((game, strategy, edges.info))
}
