//! Audits over run traces: the lemma-level claims of the adversarial
//! constructions, checked from a trace file alone.
//!
//! Traces embed their instance document, so each audit can replay the
//! visited strategies or policies structurally (initial state plus the
//! chosen switches) and combine that with the per-row improving sets,
//! ranking tiers, and watched valuation comparisons the engines recorded.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gen::mdp_families::counter_canonical_b;
use crate::harness::{load_instance, Instance};
use crate::mdp::{MarkovDecisionProcess, Policy};
use crate::parity::{SinkParityGame, Strategy, VertexId};
use crate::rules::{rankings_agree, BlandId};
use crate::trace::RunTrace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<u64>,
    pub detail: String,
}

impl AuditReport {
    fn pass(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: true,
            first_failure: None,
            detail: detail.into(),
        }
    }

    fn fail(name: &str, at: Option<u64>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: false,
            first_failure: at,
            detail: detail.into(),
        }
    }
}

/// Runs the named audits against a trace. Unknown audit names fail their
/// report rather than erroring out.
pub fn run_audits(trace: &RunTrace, names: &[String]) -> Vec<AuditReport> {
    names
        .iter()
        .map(|name| match name.as_str() {
            "alternation" => audit_alternation(trace),
            "agreement" => audit_agreement(trace),
            "constant-count" => audit_constant_count(trace),
            "canonical-ladder" => audit_canonical_ladder(trace),
            "controller" => audit_controller(trace),
            "delayer" => audit_delayer(trace),
            "filler" => audit_filler(trace),
            other => AuditReport::fail(other, None, "unknown audit"),
        })
        .collect()
}

/// Audits a family is expected to satisfy, used by the run front end when
/// no explicit list is given.
pub fn default_audits(meta: &Value) -> Vec<String> {
    match meta.pointer("/family").and_then(|v| v.as_str()) {
        Some("parity-counter") => vec!["alternation".into()],
        Some("parity-adversarial") => vec!["constant-count".into()],
        Some("parity-controlled") => vec!["controller".into()],
        Some("parity-delayed") => vec!["delayer".into()],
        Some("parity-filler") => vec!["filler".into()],
        Some("mdp-counter") => vec!["agreement".into(), "canonical-ladder".into()],
        Some("mdp-delta") | Some("mdp-gamma") => vec!["agreement".into()],
        _ => Vec::new(),
    }
}

fn embedded_instance(trace: &RunTrace) -> Result<Instance, String> {
    let doc = trace
        .instance_meta
        .as_ref()
        .ok_or("trace does not embed its instance")?;
    load_instance(doc).map_err(|e| e.to_string())
}

/// The comparison sequence for a watch label: one value per visited state,
/// including the terminal one.
fn watch_sequence(trace: &RunTrace, label: &str) -> Option<Vec<String>> {
    let mut out = Vec::with_capacity(trace.rows.len() + 1);
    for row in &trace.rows {
        out.push(row.extras.get(label)?.clone());
    }
    out.push(trace.final_extras.get(label)?.clone());
    Some(out)
}

/// The valuation order of the two watched vertices flips at every
/// iteration and is never a tie.
fn audit_alternation(trace: &RunTrace) -> AuditReport {
    let name = "alternation";
    let Some(seq) = watch_sequence(trace, "alternation") else {
        return AuditReport::fail(name, None, "trace has no alternation watch data");
    };
    for (i, v) in seq.iter().enumerate() {
        if v == "Equal" {
            return AuditReport::fail(name, Some(i as u64 + 1), "watched valuations tied");
        }
        if i + 1 < seq.len() && seq[i + 1] == *v {
            return AuditReport::fail(
                name,
                Some(i as u64 + 1),
                format!("order did not flip after iteration {}", i + 1),
            );
        }
    }
    AuditReport::pass(name, format!("order flipped across {} iterations", trace.iterations))
}

/// All recorded ranking tiers agree at every iteration and the rule never
/// fell back to the plain index order.
fn audit_agreement(trace: &RunTrace) -> AuditReport {
    let name = "agreement";
    for row in &trace.rows {
        if row.diverged {
            return AuditReport::fail(name, Some(row.iteration), "rule raised its divergence flag");
        }
        let Some(tiers) = &row.tiers else {
            return AuditReport::fail(name, Some(row.iteration), "trace has no recorded tiers");
        };
        let preorders: Vec<_> = tiers.iter().map(|(_, p)| p.clone()).collect();
        if preorders.len() > 1 && !rankings_agree(&preorders) {
            return AuditReport::fail(name, Some(row.iteration), "rankings disagree");
        }
    }
    AuditReport::pass(name, format!("rankings agreed across {} iterations", trace.iterations))
}

/// During the counting phase of an adversarial instance, the improving
/// count is frozen at `m_i / 3` and the phase covers the iteration bound.
fn audit_constant_count(trace: &RunTrace) -> AuditReport {
    let name = "constant-count";
    let Some(meta) = trace
        .instance_meta
        .as_ref()
        .and_then(|d| d.pointer("/metadata"))
    else {
        return AuditReport::fail(name, None, "trace does not embed instance metadata");
    };
    let Some(m_i) = meta.pointer("/m_i").and_then(|v| v.as_u64()) else {
        return AuditReport::fail(name, None, "metadata lacks m_i");
    };
    let bound = meta.pointer("/bound").and_then(|v| v.as_u64()).unwrap_or(1);
    let Some(classes) = meta.pointer("/edge_classes").and_then(|v| v.as_object()) else {
        return AuditReport::fail(name, None, "metadata lacks edge classes");
    };
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
            return AuditReport::fail(
                name,
                Some(row.iteration),
                format!("improving count {} (want {})", row.improving.len(), m_i / 3),
            );
        }
    }
    if phase_len < bound {
        return AuditReport::fail(
            name,
            Some(phase_len + 1),
            format!("counting phase lasted {phase_len}, bound is {bound}"),
        );
    }
    if trace.iterations < bound {
        return AuditReport::fail(
            name,
            None,
            format!("run took {} iterations, bound is {bound}", trace.iterations),
        );
    }
    AuditReport::pass(
        name,
        format!("count {} held for {phase_len} iterations (bound {bound})", m_i / 3),
    )
}

fn replay_policies(
    m: &MarkovDecisionProcess,
    initial: &Policy,
    trace: &RunTrace,
) -> Result<Vec<Policy>, String> {
    let mut out = vec![initial.clone()];
    for row in &trace.rows {
        let a = m
            .action_by_bland(row.chosen)
            .ok_or_else(|| format!("trace chose unknown action index {}", row.chosen))?;
        out.push(crate::mdp::apply_switch(out.last().unwrap(), m, a));
    }
    Ok(out)
}

fn replay_strategies(
    g: &SinkParityGame,
    initial: &Strategy,
    trace: &RunTrace,
) -> Result<Vec<Strategy>, String> {
    let mut out = vec![initial.clone()];
    for row in &trace.rows {
        let e = g
            .edge_of_bland(row.chosen)
            .ok_or_else(|| format!("trace chose unknown edge index {}", row.chosen))?;
        out.push(crate::parity::apply_switch(out.last().unwrap(), e));
    }
    Ok(out)
}

/// The counter trace visits, for every bit pattern, a policy that encodes
/// it with no improving switch on the upper chain.
fn audit_canonical_ladder(trace: &RunTrace) -> AuditReport {
    let name = "canonical-ladder";
    let inst = match embedded_instance(trace) {
        Ok(i) => i,
        Err(e) => return AuditReport::fail(name, None, e),
    };
    let Instance::Mdp(mi) = inst else {
        return AuditReport::fail(name, None, "not an MDP trace");
    };
    let Some(l) = mi.meta.pointer("/L").and_then(|v| v.as_u64()) else {
        return AuditReport::fail(name, None, "metadata lacks L");
    };
    let policies = match replay_policies(&mi.mdp, &mi.initial, trace) {
        Ok(p) => p,
        Err(e) => return AuditReport::fail(name, None, e),
    };
    let mut seen: BTreeSet<u64> = BTreeSet::new();
    for (i, p) in policies.iter().enumerate() {
        let improving: &[BlandId] = if i < trace.rows.len() {
            &trace.rows[i].improving
        } else {
            &[]
        };
        if let Some(b) = counter_canonical_b(&mi.mdp, p, improving, l) {
            seen.insert(b);
        }
    }
    let want = 1u64 << l;
    let missing: Vec<u64> = (0..want).filter(|b| !seen.contains(b)).collect();
    if missing.is_empty() {
        AuditReport::pass(name, format!("all {want} canonical policies visited"))
    } else {
        AuditReport::fail(name, None, format!("missing patterns {missing:?}"))
    }
}

/// For every controller whose chain edge is still chosen, exactly one of
/// the wrapped edge and the complement switch is improving, at every step.
fn audit_controller(trace: &RunTrace) -> AuditReport {
    let name = "controller";
    let inst = match embedded_instance(trace) {
        Ok(i) => i,
        Err(e) => return AuditReport::fail(name, None, e),
    };
    let Instance::Parity(pi) = inst else {
        return AuditReport::fail(name, None, "not a parity trace");
    };
    let Some(list) = pi.meta.pointer("/controllers").and_then(|v| v.as_array()) else {
        return AuditReport::fail(name, None, "metadata lacks controller info");
    };
    let g = &pi.game;
    let vertex = |n: &str| -> Result<VertexId, String> {
        g.vertex_by_name(n).ok_or_else(|| format!("unknown vertex {n}"))
    };
    struct Ctl {
        owner: VertexId,
        chain_target: VertexId,
        wrapped: BlandId,
        a_prime: BlandId,
    }
    let mut ctls = Vec::new();
    for item in list {
        let get = |ptr: &str| -> Result<(String, String), String> {
            let pair = item
                .pointer(ptr)
                .and_then(|v| v.as_array())
                .ok_or_else(|| format!("controller info lacks {ptr}"))?;
            Ok((
                pair[0].as_str().unwrap_or_default().to_string(),
                pair[1].as_str().unwrap_or_default().to_string(),
            ))
        };
        let (wx, wy) = match get("/wrapped") {
            Ok(v) => v,
            Err(e) => return AuditReport::fail(name, None, e),
        };
        let (ax, az) = match get("/a") {
            Ok(v) => v,
            Err(e) => return AuditReport::fail(name, None, e),
        };
        let (px, py) = match get("/a_prime") {
            Ok(v) => v,
            Err(e) => return AuditReport::fail(name, None, e),
        };
        let resolve = |x: &str, y: &str| -> Result<BlandId, String> {
            let (xi, yi) = (vertex(x)?, vertex(y)?);
            g.bland_of(xi, yi).ok_or_else(|| format!("no edge {x} -> {y}"))
        };
        let ctl = (|| -> Result<Ctl, String> {
            Ok(Ctl {
                owner: vertex(&ax)?,
                chain_target: vertex(&az)?,
                wrapped: resolve(&wx, &wy)?,
                a_prime: resolve(&px, &py)?,
            })
        })();
        match ctl {
            Ok(c) => ctls.push(c),
            Err(e) => return AuditReport::fail(name, None, e),
        }
    }
    let strategies = match replay_strategies(g, &pi.initial, trace) {
        Ok(s) => s,
        Err(e) => return AuditReport::fail(name, None, e),
    };
    for (i, row) in trace.rows.iter().enumerate() {
        let sigma = &strategies[i];
        let improving: BTreeSet<BlandId> = row.improving.iter().copied().collect();
        for c in &ctls {
            if sigma.choice.get(&c.owner) != Some(&c.chain_target) {
                continue;
            }
            let w = improving.contains(&c.wrapped);
            let p = improving.contains(&c.a_prime);
            if w == p {
                return AuditReport::fail(
                    name,
                    Some(row.iteration),
                    format!(
                        "pair at {} is {}",
                        g.names[c.owner],
                        if w { "doubly improving" } else { "dead" }
                    ),
                );
            }
        }
    }
    AuditReport::pass(
        name,
        format!("{} controllers complementary across {} iterations", ctls.len(), trace.iterations),
    )
}

/// Delayer drains: at most one internal improving switch per iteration,
/// and exactly `k+1` internal switches between consecutive order flips of
/// the two watched exits.
fn audit_delayer(trace: &RunTrace) -> AuditReport {
    let name = "delayer";
    let inst = match embedded_instance(trace) {
        Ok(i) => i,
        Err(e) => return AuditReport::fail(name, None, e),
    };
    let Instance::Parity(pi) = inst else {
        return AuditReport::fail(name, None, "not a parity trace");
    };
    let Some(info) = pi.meta.pointer("/delayer") else {
        return AuditReport::fail(name, None, "metadata lacks delayer info");
    };
    let k = info.pointer("/k").and_then(|v| v.as_u64()).unwrap_or(0);
    let g = &pi.game;
    let mut gadget: BTreeSet<BlandId> = BTreeSet::new();
    for fam in ["/l_edges", "/r_edges"] {
        let Some(edges) = info.pointer(fam).and_then(|v| v.as_array()) else {
            return AuditReport::fail(name, None, "delayer info lacks edge lists");
        };
        for pair in edges {
            let x = pair[0].as_str().unwrap_or_default();
            let y = pair[1].as_str().unwrap_or_default();
            let Some(b) = g
                .vertex_by_name(x)
                .zip(g.vertex_by_name(y))
                .and_then(|(xi, yi)| g.bland_of(xi, yi))
            else {
                return AuditReport::fail(name, None, format!("no edge {x} -> {y}"));
            };
            gadget.insert(b);
        }
    }
    let Some(flips) = watch_sequence(trace, "flip") else {
        return AuditReport::fail(name, None, "trace has no flip watch data");
    };
    // segment the run by the watched order; each complete segment must
    // contain zero or exactly k+1 internal switches
    let mut segment_counts = Vec::new();
    let mut current = 0u64;
    for (i, row) in trace.rows.iter().enumerate() {
        let inside = row.improving.iter().filter(|b| gadget.contains(b)).count();
        if inside > 1 {
            return AuditReport::fail(
                name,
                Some(row.iteration),
                format!("{inside} internal improving switches at once"),
            );
        }
        if gadget.contains(&row.chosen) {
            if inside == 0 {
                return AuditReport::fail(
                    name,
                    Some(row.iteration),
                    "internal switch chosen while none improving",
                );
            }
            current += 1;
        }
        if flips[i + 1] != flips[i] {
            segment_counts.push(current);
            current = 0;
        }
    }
    segment_counts.push(current);
    for (seg, &count) in segment_counts.iter().enumerate() {
        if count != 0 && count != k + 1 {
            return AuditReport::fail(
                name,
                None,
                format!("segment {seg} drained {count} switches, want 0 or {}", k + 1),
            );
        }
    }
    let drains = segment_counts.iter().filter(|&&c| c == k + 1).count();
    if drains == 0 {
        return AuditReport::fail(name, None, "no drain was ever exercised");
    }
    AuditReport::pass(name, format!("{drains} drains of exactly {} switches", k + 1))
}

/// Each filler's improving edge stays improving until taken and never
/// returns afterwards.
fn audit_filler(trace: &RunTrace) -> AuditReport {
    let name = "filler";
    let inst = match embedded_instance(trace) {
        Ok(i) => i,
        Err(e) => return AuditReport::fail(name, None, e),
    };
    let Instance::Parity(pi) = inst else {
        return AuditReport::fail(name, None, "not a parity trace");
    };
    let Some(list) = pi.meta.pointer("/fillers").and_then(|v| v.as_array()) else {
        return AuditReport::fail(name, None, "metadata lacks filler info");
    };
    let g = &pi.game;
    let mut edges = Vec::new();
    for item in list {
        let Some(pair) = item.pointer("/improving").and_then(|v| v.as_array()) else {
            return AuditReport::fail(name, None, "filler info lacks its improving edge");
        };
        let x = pair[0].as_str().unwrap_or_default();
        let y = pair[1].as_str().unwrap_or_default();
        let Some(b) = g
            .vertex_by_name(x)
            .zip(g.vertex_by_name(y))
            .and_then(|(xi, yi)| g.bland_of(xi, yi))
        else {
            return AuditReport::fail(name, None, format!("no edge {x} -> {y}"));
        };
        edges.push(b);
    }
    for &edge in &edges {
        let mut taken = false;
        for row in &trace.rows {
            let improving = row.improving.contains(&edge);
            if !taken && !improving {
                return AuditReport::fail(
                    name,
                    Some(row.iteration),
                    "filler stopped improving before being taken",
                );
            }
            if taken && improving {
                return AuditReport::fail(
                    name,
                    Some(row.iteration),
                    "filler improved again after being taken",
                );
            }
            if row.chosen == edge {
                taken = true;
            }
        }
    }
    AuditReport::pass(name, format!("{} fillers one-shot as required", edges.len()))
}

/// Map of audit name to pass flag, rendered `a=pass;b=fail` for CSV rows.
pub fn summarize(reports: &[AuditReport]) -> String {
    if reports.is_empty() {
        return "-".into();
    }
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{}={}", r.name, if r.passed { "pass" } else { "fail" }))
        .collect();
    parts.join(";")
}

/// Strategies replayed from a trace, exposed for tests that need the
/// visited states.
pub fn replayed_strategies(trace: &RunTrace) -> Result<(SinkParityGame, Vec<Strategy>), String> {
    match embedded_instance(trace)? {
        Instance::Parity(pi) => {
            let s = replay_strategies(&pi.game, &pi.initial, trace)?;
            Ok((pi.game, s))
        }
        _ => Err("not a parity trace".into()),
    }
}

/// Policies replayed from a trace.
pub fn replayed_policies(trace: &RunTrace) -> Result<(MarkovDecisionProcess, Vec<Policy>), String> {
    match embedded_instance(trace)? {
        Instance::Mdp(mi) => {
            let p = replay_policies(&mi.mdp, &mi.initial, trace)?;
            Ok((mi.mdp, p))
        }
        _ => Err("not an MDP trace".into()),
    }
}

#[allow(unused)]
fn unused_type_holder(_: BTreeMap<String, String>) {}
