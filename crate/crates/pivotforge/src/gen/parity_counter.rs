//! The binary-counter sink parity game family.
//!
//! Level `i` of the `n`-level game has a player-0 vertex `a_i` with priority
//! `2i+1` and a player-1 vertex `b_i` with priority `2i+2`; a final player-1
//! vertex `b_{n+1}` with priority `2n+4` leads to the sink. From `a_i` the
//! edge to `a_{i+1}` carries Bland number `2i-1` and the edge to `b_{i+1}`
//! carries `2i` (with `a_{n+1}` read as the sink). The initial strategy runs
//! along the `a`-chain, and strategy improvement under the smallest-index
//! rule walks through all `2^n - 1` counter increments.

use crate::gen::build::GameBuilder;
use crate::parity::{Owner, SinkParityGame, Strategy};

pub fn counter_game(n: usize) -> SinkParityGame {
    counter_game_with_strategy(n).0
}

pub fn counter_game_with_strategy(n: usize) -> (SinkParityGame, Strategy) {
    assert!(n >= 1, "counter needs at least one level");
    let mut b = GameBuilder::new();
    let a: Vec<_> = (1..=n)
        .map(|i| b.add_vertex(format!("a{i}"), Owner::Player0, 2 * i as i64 + 1))
        .collect();
    let bs: Vec<_> = (1..=n)
        .map(|i| b.add_vertex(format!("b{i}"), Owner::Player1, 2 * i as i64 + 2))
        .collect();
    let b_top = b.add_vertex(format!("b{}", n + 1), Owner::Player1, 2 * n as i64 + 4);
    let sink = b.add_sink("T");

    let mut order = Vec::new();
    for i in 0..n {
        let a_next = if i + 1 < n { a[i + 1] } else { sink };
        let b_next = if i + 1 < n { bs[i + 1] } else { b_top };
        let to_a = b.add_p0_edge(a[i], a_next);
        let to_b = b.add_p0_edge(a[i], b_next);
        b.choose(to_a);
        order.push(to_a);
        order.push(to_b);
        b.add_edge(bs[i], b_next);
        b.add_edge(bs[i], a_next);
    }
    b.add_edge(b_top, sink);
    b.finish(&order)
}

/// The strategy running along the `a`-chain into the sink.
pub fn initial_strategy(g: &SinkParityGame) -> Strategy {
    let mut choice = std::collections::BTreeMap::new();
    for v in 0..g.vertex_count() {
        if matches!(g.owner[v], Owner::Player0) {
            let name = &g.names[v];
            let i: usize = name[1..].parse().expect("counter vertex name");
            let next = g
                .vertex_by_name(&format!("a{}", i + 1))
                .unwrap_or(g.sink);
            assert!(g.succ[v].contains(&next));
            choice.insert(v, next);
        }
    }
    Strategy { choice }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parity::{validate_game, Owner};

    #[test]
    fn g2_structure() {
        let g = counter_game(2);
        assert!(validate_game(&g).is_empty());
        let p0 = g.owner.iter().filter(|o| matches!(o, Owner::Player0)).count();
        let p1 = g.owner.iter().filter(|o| matches!(o, Owner::Player1)).count();
        assert_eq!(p0, 2);
        assert_eq!(p1, 3);
        assert_eq!(g.player0_edge_count(), 4);
        let a1 = g.vertex_by_name("a1").unwrap();
        let b1 = g.vertex_by_name("b1").unwrap();
        assert_eq!(g.priority[a1].value(), Some(3));
        assert_eq!(g.priority[b1].value(), Some(4));
        // bland numbers 2i-1 / 2i per level
        let a2 = g.vertex_by_name("a2").unwrap();
        let b2 = g.vertex_by_name("b2").unwrap();
        assert_eq!(g.bland_of(a1, a2), Some(1));
        assert_eq!(g.bland_of(a1, b2), Some(2));
    }

    #[test]
    fn initial_strategy_runs_the_a_chain() {
        let (g, s) = counter_game_with_strategy(3);
        assert_eq!(s, initial_strategy(&g));
        let a3 = g.vertex_by_name("a3").unwrap();
        assert_eq!(s.choice[&a3], g.sink);
    }
}
