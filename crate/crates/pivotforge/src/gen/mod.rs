//! Generators for every adversarial construction: the binary-counter game,
//! the controller/filler/delayer/multiplier/double-filler gadgets, the
//! clustered-or-dispersed decomposition with its independent verifiers, the
//! adversarial builder for arbitrary index selectors, and the four MDP
//! families.

use thiserror::Error;

pub mod adversarial;
pub mod build;
pub mod decompose;
pub mod gadgets;
pub mod mdp_families;
pub mod parity_counter;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("generator precondition violated: {0}")]
    Precondition(String),
    #[error("construction invariant failed: {0}")]
    Construction(String),
}
