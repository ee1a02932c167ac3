//! Workbench for single-switch strategy improvement on sink parity games,
//! policy iteration on weak unichain Markov decision processes, and the
//! exact-rational simplex method, all driven through one pluggable
//! pivot-rule framework.
//!
//! The crate also ships generators for adversarial lower-bound instances
//! (binary-counter games, controller/filler/delayer gadgets, action-copied
//! and probability-gadget MDP families) and an audit layer that checks the
//! structural claims those constructions are built around: iteration
//! bounds, constant improving-move counts, ranking agreement, and lockstep
//! equivalence between policy iteration and simplex.
//!
//! All arithmetic is exact: big-integer valuation sums for parity games and
//! arbitrary-precision rationals everywhere else. Nothing in this crate
//! rounds.

pub mod audit;
pub mod gen;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod mdp;
pub mod num;
pub mod ordering;
pub mod parity;
pub mod reduce;
pub mod rules;
pub mod simplex;
pub mod trace;

pub use num::Rational;
pub use ordering::{Priority, ValuationMultiset};
