//! Run traces: the per-iteration record every engine produces and every
//! audit consumes.
//!
//! Traces are plain data. They carry enough per-row state (improving set,
//! chosen element with its Bland rank, ranking tiers when requested,
//! objective, watched valuation comparisons) that the audit layer can check
//! lemma-level claims without re-running an engine. Reruns of identical
//! experiment specs serialize to byte-identical trace files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rules::{BlandId, TotalPreorder};

/// FNV-1a, 64-bit; stable across platforms and runs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    /// No improving switch remained.
    Optimal,
    /// The iteration cap was reached; the trace is incomplete.
    Capped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    /// Hash of the state (strategy / policy / basis) the decision was made
    /// at.
    pub state_hash: String,
    /// Improving elements at this state, Bland ids ascending.
    pub improving: Vec<BlandId>,
    pub chosen: BlandId,
    /// Position of the chosen element in `improving`, 1-based.
    pub chosen_rank: u64,
    /// Memory state the rule was consulted with.
    pub memory: u64,
    /// Exact objective at this state (valuation sum or rational), rendered
    /// as a string.
    pub objective: String,
    /// Set when an f-rule fell back to the Bland order this step.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub diverged: bool,
    /// Ranking tiers consulted this step, if tier recording was enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiers: Option<Vec<(String, TotalPreorder)>>,
    /// Named watch values (e.g. valuation-order comparisons), if enabled.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub rule: String,
    pub cap: u64,
    pub status: TerminalStatus,
    /// Number of applied switches.
    pub iterations: u64,
    pub rows: Vec<TraceRow>,
    /// Hash of the terminal state.
    pub final_state_hash: String,
    /// Exact objective at the terminal state.
    pub final_objective: String,
    /// Improving count at the terminal state (0 when optimal).
    pub final_improving: u64,
    /// Watch values evaluated at the terminal state.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub final_extras: BTreeMap<String, String>,
    /// Instance metadata carried along so audits can run from the trace
    /// file alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_meta: Option<serde_json::Value>,
}

impl RunTrace {
    pub fn chosen_ranks(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.chosen_rank).collect()
    }

    pub fn reached_optimum(&self) -> bool {
        self.status == TerminalStatus::Optimal
    }
}

/// What a run should record beyond the mandatory fields.
#[derive(Debug, Clone, Default)]
pub struct TraceOptions {
    /// Record the consulted ranking tiers per row.
    pub record_tiers: bool,
    /// Record full exact valuations/values per row (traces carry only
    /// Bland ranks and an objective summary by default).
    pub record_valuations: bool,
    /// Pairs of vertices/states to compare per row; records
    /// Less/Equal/Greater of the first against the second under the extras
    /// key.
    pub watch_pairs: Vec<WatchPair>,
    pub cap: u64,
}

#[derive(Debug, Clone)]
pub struct WatchPair {
    pub label: String,
    pub first: String,
    pub second: String,
}

impl TraceOptions {
    pub fn with_cap(cap: u64) -> Self {
        Self {
            cap,
            ..Default::default()
        }
    }
}

pub const DEFAULT_CAP: u64 = 1 << 40;

pub fn ordering_label(o: std::cmp::Ordering) -> &'static str {
    match o {
        std::cmp::Ordering::Less => "Less",
        std::cmp::Ordering::Equal => "Equal",
        std::cmp::Ordering::Greater => "Greater",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
