//! Small builder for assembling sink parity games with explicit control
//! over the Bland ordering of player-0 edges.

use std::collections::BTreeMap;

use crate::ordering::Priority;
use crate::parity::{Owner, SinkParityGame, Strategy, VertexId};

/// Handle to a player-0 edge whose Bland number is assigned at `finish`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeRef(pub usize);

#[derive(Debug, Default)]
pub struct GameBuilder {
    names: Vec<String>,
    owner: Vec<Owner>,
    priority: Vec<Priority>,
    succ: Vec<Vec<VertexId>>,
    sink: Option<VertexId>,
    p0_edges: Vec<(VertexId, VertexId)>,
    choices: BTreeMap<VertexId, VertexId>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>, owner: Owner, priority: i64) -> VertexId {
        assert!(!matches!(owner, Owner::Sink), "use add_sink for the sink");
        self.push(name.into(), owner, Priority::Value(priority))
    }

    pub fn add_sink(&mut self, name: impl Into<String>) -> VertexId {
        assert!(self.sink.is_none(), "sink already added");
        let v = self.push(name.into(), Owner::Sink, Priority::Bottom);
        self.sink = Some(v);
        self.succ[v].push(v);
        v
    }

    fn push(&mut self, name: String, owner: Owner, priority: Priority) -> VertexId {
        let v = self.names.len();
        self.names.push(name);
        self.owner.push(owner);
        self.priority.push(priority);
        self.succ.push(Vec::new());
        v
    }

    /// Adds a player-1 edge (or any edge whose source is not player 0).
    pub fn add_edge(&mut self, src: VertexId, tgt: VertexId) {
        assert!(
            !matches!(self.owner[src], Owner::Player0),
            "player-0 edges need a bland slot"
        );
        self.succ[src].push(tgt);
    }

    /// Adds a player-0 edge; its Bland number is fixed later by `finish`.
    pub fn add_p0_edge(&mut self, src: VertexId, tgt: VertexId) -> EdgeRef {
        assert!(matches!(self.owner[src], Owner::Player0));
        self.succ[src].push(tgt);
        self.p0_edges.push((src, tgt));
        EdgeRef(self.p0_edges.len() - 1)
    }

    /// Marks the initial strategy's choice at a player-0 vertex.
    pub fn choose(&mut self, e: EdgeRef) {
        let (src, tgt) = self.p0_edges[e.0];
        self.choices.insert(src, tgt);
    }

    pub fn priority_of(&self, v: VertexId) -> i64 {
        self.priority[v].value().expect("non-sink vertex")
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.names[v]
    }

    pub fn edge_endpoints(&self, e: EdgeRef) -> (VertexId, VertexId) {
        self.p0_edges[e.0]
    }

    pub fn p0_edge_count(&self) -> usize {
        self.p0_edges.len()
    }

    /// Finalizes the game. `bland_order` lists every player-0 edge exactly
    /// once; position i gets Bland number i+1.
    pub fn finish(self, bland_order: &[EdgeRef]) -> (SinkParityGame, Strategy) {
        assert_eq!(
            bland_order.len(),
            self.p0_edges.len(),
            "bland order must cover all player-0 edges"
        );
        let mut bland = BTreeMap::new();
        for (i, e) in bland_order.iter().enumerate() {
            let prev = bland.insert(i as u64 + 1, self.p0_edges[e.0]);
            assert!(prev.is_none());
        }
        assert_eq!(
            bland.values().collect::<std::collections::BTreeSet<_>>().len(),
            self.p0_edges.len(),
            "bland order repeats an edge"
        );
        let game = SinkParityGame {
            names: self.names,
            owner: self.owner,
            priority: self.priority,
            succ: self.succ,
            sink: self.sink.expect("game needs a sink"),
            bland,
        };
        let strategy = Strategy {
            choice: self.choices,
        };
        (game, strategy)
    }
}
