//! Instance files, the rule mini-language, and the experiment runners the
//! command-line front end drives.
//!
//! Instances serialize to JSON with exact `num/den` rationals and carry a
//! metadata block (family, parameters, recorded scales and bounds, edge
//! classes, the initial strategy or policy). Traces embed the full
//! instance document so audits can run from a trace file alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::gen::adversarial::{build_adversarial_parity, ParityInstance};
use crate::gen::gadgets::{gadget_controller, gadget_delayer, gadget_filler};
use crate::gen::mdp_families::{
    gen_mdp_copied, gen_mdp_counter, gen_mdp_delta, gen_mdp_gamma, MdpInstance,
};
use crate::gen::parity_counter::counter_game_with_strategy;
use crate::gen::GenError;
use crate::mdp::{policy_iteration, Action, MarkovDecisionProcess, MdpError, Policy};
use crate::num::{rat_from_str, rat_to_string, Rational};
use crate::ordering::Priority;
use crate::parity::{strategy_improvement, Owner, ParityError, SinkParityGame, Strategy};
use crate::rules::{IndexSelector, PivotRule, RankPicker, RankingKind, SelectorTransition};
use crate::simplex::{simplex, Basis, LinearProgram, SimplexError};
use crate::trace::{RunTrace, TraceOptions, WatchPair};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Parity(#[from] ParityError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------- schemas

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParityGameDoc {
    pub player0: Vec<String>,
    pub player1: Vec<String>,
    pub sink: String,
    pub priorities: BTreeMap<String, Value>,
    pub edges: Vec<(String, String)>,
    pub bland: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

pub fn parity_to_doc(g: &SinkParityGame, meta: Option<Value>) -> ParityGameDoc {
    let mut priorities = BTreeMap::new();
    for v in 0..g.vertex_count() {
        let p = match g.priority[v] {
            Priority::Bottom => json!("-inf"),
            Priority::Value(x) => json!(x),
        };
        priorities.insert(g.names[v].clone(), p);
    }
    let mut edges = Vec::new();
    for v in 0..g.vertex_count() {
        for &w in &g.succ[v] {
            edges.push((g.names[v].clone(), g.names[w].clone()));
        }
    }
    let bland = g
        .bland
        .iter()
        .map(|(&b, &(s, t))| (format!("{},{}", g.names[s], g.names[t]), b))
        .collect();
    ParityGameDoc {
        player0: (0..g.vertex_count())
            .filter(|&v| matches!(g.owner[v], Owner::Player0))
            .map(|v| g.names[v].clone())
            .collect(),
        player1: (0..g.vertex_count())
            .filter(|&v| matches!(g.owner[v], Owner::Player1))
            .map(|v| g.names[v].clone())
            .collect(),
        sink: g.names[g.sink].clone(),
        priorities,
        edges,
        bland,
        metadata: meta,
    }
}

pub fn doc_to_parity(doc: &ParityGameDoc) -> Result<SinkParityGame, HarnessError> {
    let mut names = Vec::new();
    let mut owner = Vec::new();
    for n in &doc.player0 {
        names.push(n.clone());
        owner.push(Owner::Player0);
    }
    for n in &doc.player1 {
        names.push(n.clone());
        owner.push(Owner::Player1);
    }
    names.push(doc.sink.clone());
    owner.push(Owner::Sink);
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if index.len() != names.len() {
        return Err(HarnessError::Spec("duplicate vertex names".into()));
    }
    let mut priority = Vec::with_capacity(names.len());
    for n in &names {
        let p = doc
            .priorities
            .get(n)
            .ok_or_else(|| HarnessError::Spec(format!("no priority for {n}")))?;
        priority.push(match p {
            Value::String(s) if s.trim() == "-inf" => Priority::Bottom,
            Value::Number(num) => Priority::Value(
                num.as_i64()
                    .ok_or_else(|| HarnessError::Spec(format!("bad priority for {n}")))?,
            ),
            _ => return Err(HarnessError::Spec(format!("bad priority for {n}"))),
        });
    }
    let mut succ = vec![Vec::new(); names.len()];
    for (s, t) in &doc.edges {
        let si = *index
            .get(s.as_str())
            .ok_or_else(|| HarnessError::Spec(format!("unknown vertex {s}")))?;
        let ti = *index
            .get(t.as_str())
            .ok_or_else(|| HarnessError::Spec(format!("unknown vertex {t}")))?;
        succ[si].push(ti);
    }
    let mut bland = BTreeMap::new();
    for (key, &b) in &doc.bland {
        let (s, t) = key
            .split_once(',')
            .ok_or_else(|| HarnessError::Spec(format!("bad bland key {key}")))?;
        let si = *index
            .get(s.trim())
            .ok_or_else(|| HarnessError::Spec(format!("unknown vertex {s}")))?;
        let ti = *index
            .get(t.trim())
            .ok_or_else(|| HarnessError::Spec(format!("unknown vertex {t}")))?;
        bland.insert(b, (si, ti));
    }
    Ok(SinkParityGame {
        sink: index[doc.sink.as_str()],
        names,
        owner,
        priority,
        succ,
        bland,
    })
}

pub fn strategy_from_meta(g: &SinkParityGame, meta: &Value) -> Result<Strategy, HarnessError> {
    let map = meta
        .pointer("/initial_strategy")
        .and_then(|v| v.as_object())
        .ok_or_else(|| HarnessError::Spec("metadata lacks initial_strategy".into()))?;
    let mut choice = BTreeMap::new();
    for (s, t) in map {
        let si = g
            .vertex_by_name(s)
            .ok_or_else(|| HarnessError::Spec(format!("unknown vertex {s}")))?;
        let t = t
            .as_str()
            .ok_or_else(|| HarnessError::Spec("bad strategy".into()))?;
        let ti = g
            .vertex_by_name(t)
            .ok_or_else(|| HarnessError::Spec(format!("unknown vertex {t}")))?;
        choice.insert(si, ti);
    }
    Ok(Strategy { choice })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionDoc {
    pub id: String,
    pub source: String,
    pub reward: String,
    pub transitions: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bland: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDoc {
    pub states: Vec<String>,
    pub sink: String,
    pub actions: Vec<ActionDoc>,
    pub available: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

pub fn mdp_to_doc(m: &MarkovDecisionProcess, meta: Option<Value>) -> MdpDoc {
    MdpDoc {
        states: m.state_names.clone(),
        sink: m.state_names[m.sink].clone(),
        actions: m
            .actions
            .iter()
            .map(|a| ActionDoc {
                id: a.name.clone(),
                source: m.state_names[a.source].clone(),
                reward: rat_to_string(&a.reward),
                transitions: a
                    .transitions
                    .iter()
                    .map(|(s, p)| (m.state_names[*s].clone(), rat_to_string(p)))
                    .collect(),
                bland: a.bland,
            })
            .collect(),
        available: m
            .available
            .iter()
            .enumerate()
            .map(|(s, acts)| {
                (
                    m.state_names[s].clone(),
                    acts.iter().map(|&a| m.actions[a].name.clone()).collect(),
                )
            })
            .collect(),
        metadata: meta,
    }
}

pub fn doc_to_mdp(doc: &MdpDoc) -> Result<MarkovDecisionProcess, HarnessError> {
    let index: BTreeMap<&str, usize> = doc
        .states
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if index.len() != doc.states.len() {
        return Err(HarnessError::Spec("duplicate state names".into()));
    }
    let sink = *index
        .get(doc.sink.as_str())
        .ok_or_else(|| HarnessError::Spec("unknown sink".into()))?;
    let mut actions = Vec::new();
    for a in &doc.actions {
        let source = *index
            .get(a.source.as_str())
            .ok_or_else(|| HarnessError::Spec(format!("unknown state {}", a.source)))?;
        let mut transitions = Vec::new();
        for (s, p) in &a.transitions {
            transitions.push((
                *index
                    .get(s.as_str())
                    .ok_or_else(|| HarnessError::Spec(format!("unknown state {s}")))?,
                rat_from_str(p).map_err(HarnessError::Spec)?,
            ));
        }
        actions.push(Action {
            name: a.id.clone(),
            source,
            reward: rat_from_str(&a.reward).map_err(HarnessError::Spec)?,
            transitions,
            bland: a.bland,
        });
    }
    let mut available = vec![Vec::new(); doc.states.len()];
    for (s, acts) in &doc.available {
        let si = *index
            .get(s.as_str())
            .ok_or_else(|| HarnessError::Spec(format!("unknown state {s}")))?;
        for name in acts {
            let ai = actions
                .iter()
                .position(|a| &a.name == name)
                .ok_or_else(|| HarnessError::Spec(format!("unknown action {name}")))?;
            available[si].push(ai);
        }
    }
    Ok(MarkovDecisionProcess {
        state_names: doc.states.clone(),
        sink,
        actions,
        available,
    })
}

pub fn policy_from_meta(m: &MarkovDecisionProcess, meta: &Value) -> Result<Policy, HarnessError> {
    let map = meta
        .pointer("/initial_policy")
        .and_then(|v| v.as_object())
        .ok_or_else(|| HarnessError::Spec("metadata lacks initial_policy".into()))?;
    let mut choice = vec![usize::MAX; m.state_count()];
    choice[m.sink] = m.available[m.sink][0];
    for (s, a) in map {
        let si = m
            .state_by_name(s)
            .ok_or_else(|| HarnessError::Spec(format!("unknown state {s}")))?;
        let an = a
            .as_str()
            .ok_or_else(|| HarnessError::Spec("bad policy".into()))?;
        choice[si] = m
            .action_by_name(an)
            .ok_or_else(|| HarnessError::Spec(format!("unknown action {an}")))?;
    }
    for s in 0..m.state_count() {
        if choice[s] == usize::MAX {
            if m.available[s].len() == 1 {
                choice[s] = m.available[s][0];
            } else {
                return Err(HarnessError::Spec(format!(
                    "initial policy misses state {}",
                    m.state_names[s]
                )));
            }
        }
    }
    Ok(Policy { choice })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpDoc {
    pub a: Vec<Vec<String>>,
    pub b: Vec<String>,
    pub c: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

pub fn lp_to_doc(lp: &LinearProgram, meta: Option<Value>) -> LpDoc {
    LpDoc {
        a: lp
            .a
            .iter()
            .map(|row| row.iter().map(rat_to_string).collect())
            .collect(),
        b: lp.b.iter().map(rat_to_string).collect(),
        c: lp.c.iter().map(rat_to_string).collect(),
        metadata: meta,
    }
}

pub fn doc_to_lp(doc: &LpDoc) -> Result<LinearProgram, HarnessError> {
    let parse_vec = |v: &[String]| -> Result<Vec<Rational>, HarnessError> {
        v.iter()
            .map(|s| rat_from_str(s).map_err(HarnessError::Spec))
            .collect()
    };
    Ok(LinearProgram {
        a: doc
            .a
            .iter()
            .map(|row| parse_vec(row))
            .collect::<Result<_, _>>()?,
        b: parse_vec(&doc.b)?,
        c: parse_vec(&doc.c)?,
    })
}

/// Plain-text equality-form listing for external cross-checks.
pub fn lp_to_text(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str("max ");
    for (j, c) in lp.c.iter().enumerate() {
        if j > 0 {
            out.push_str(" + ");
        }
        out.push_str(&format!("{} x{}", rat_to_string(c), j + 1));
    }
    out.push('\n');
    for (i, row) in lp.a.iter().enumerate() {
        out.push_str("s.t. ");
        for (j, a) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(" + ");
            }
            out.push_str(&format!("{} x{}", rat_to_string(a), j + 1));
        }
        out.push_str(&format!(" = {}\n", rat_to_string(&lp.b[i])));
    }
    out.push_str("x >= 0\n");
    out
}

// --------------------------------------------------- rule mini-language

/// Parses the rule specification mini-language, e.g.
/// `{"kind":"greedy","ranking":"dantzig"}`,
/// `{"kind":"f","table":{"4":2},"default":"sqrt-ceil"}`,
/// `{"kind":"index-selector","transitions":[[null,null,1,1,1]],"memory":1}`,
/// `{"kind":"index-selector","constant":1}`, or
/// `{"kind":"index-selector","cyclic":[1,2]}`.
pub fn rule_from_spec(spec: &Value) -> Result<PivotRule, HarnessError> {
    let kind = spec
        .pointer("/kind")
        .and_then(|v| v.as_str())
        .ok_or_else(|| HarnessError::Spec("rule spec needs a kind".into()))?;
    match kind {
        "greedy" => {
            let ranking = spec
                .pointer("/ranking")
                .and_then(|v| v.as_str())
                .ok_or_else(|| HarnessError::Spec("greedy rule needs a ranking".into()))?;
            let ranking = match ranking {
                "bland" => RankingKind::Bland,
                "dantzig" => RankingKind::Dantzig,
                "largest-increase" => RankingKind::LargestIncrease,
                "steepest-edge" => RankingKind::SteepestEdge,
                "shadow-vertex" => {
                    let d = spec
                        .pointer("/d")
                        .and_then(|v| v.as_array())
                        .ok_or_else(|| {
                            HarnessError::Spec("shadow-vertex needs an objective vector d".into())
                        })?
                        .iter()
                        .map(|x| match x {
                            Value::String(s) => Ok(s.clone()),
                            Value::Number(n) => Ok(n.to_string()),
                            _ => Err(HarnessError::Spec("bad shadow vector entry".into())),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    RankingKind::ShadowVertex { d }
                }
                other => return Err(HarnessError::Spec(format!("unknown ranking {other}"))),
            };
            Ok(PivotRule::greedy(ranking))
        }
        "f" => {
            let default = match spec.pointer("/default").and_then(|v| v.as_str()) {
                None | Some("one") => RankPicker::One,
                Some("k") => RankPicker::K,
                Some("sqrt-ceil") => RankPicker::SqrtCeil,
                Some(other) => {
                    return Err(HarnessError::Spec(format!("unknown f default {other}")))
                }
            };
            let picker = match spec.pointer("/table").and_then(|v| v.as_object()) {
                None => default,
                Some(table) => {
                    let mut map = BTreeMap::new();
                    for (k, v) in table {
                        let k: u64 = k
                            .parse()
                            .map_err(|_| HarnessError::Spec(format!("bad f table key {k}")))?;
                        let v = v
                            .as_u64()
                            .ok_or_else(|| HarnessError::Spec("bad f table value".into()))?;
                        map.insert(k, v);
                    }
                    RankPicker::Table {
                        table: map,
                        default: Box::new(default),
                    }
                }
            };
            Ok(PivotRule::f_rule(picker))
        }
        "index-selector" => {
            if let Some(rank) = spec.pointer("/constant").and_then(|v| v.as_u64()) {
                return Ok(PivotRule::index_based(IndexSelector::Constant { rank }));
            }
            if let Some(ranks) = spec.pointer("/cyclic").and_then(|v| v.as_array()) {
                let ranks = ranks
                    .iter()
                    .map(|v| {
                        v.as_u64()
                            .ok_or_else(|| HarnessError::Spec("bad rank".into()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(PivotRule::index_based(IndexSelector::Cyclic { ranks }));
            }
            let transitions = spec
                .pointer("/transitions")
                .and_then(|v| v.as_array())
                .ok_or_else(|| HarnessError::Spec("index selector needs transitions".into()))?
                .iter()
                .map(|row| {
                    let row = row.as_array().filter(|r| r.len() == 5).ok_or_else(|| {
                        HarnessError::Spec("transition rows are [k,n,h,rank,h']".into())
                    })?;
                    let opt = |v: &Value| -> Result<Option<u64>, HarnessError> {
                        if v.is_null() {
                            Ok(None)
                        } else {
                            v.as_u64()
                                .map(Some)
                                .ok_or_else(|| HarnessError::Spec("bad transition entry".into()))
                        }
                    };
                    let req = |v: &Value| -> Result<u64, HarnessError> {
                        v.as_u64()
                            .ok_or_else(|| HarnessError::Spec("bad transition entry".into()))
                    };
                    Ok(SelectorTransition {
                        k: opt(&row[0])?,
                        n: opt(&row[1])?,
                        h: req(&row[2])?,
                        rank: req(&row[3])?,
                        next: req(&row[4])?,
                    })
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let memory = spec
                .pointer("/memory")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| HarnessError::Spec("index selector needs a memory bound".into()))?;
            let clamp = spec
                .pointer("/clamp")
                .and_then(|v| v.as_bool())
                .unwrap_or(false);
            Ok(PivotRule::index_based(IndexSelector::Table {
                transitions,
                memory,
                clamp,
            }))
        }
        other => Err(HarnessError::Spec(format!("unknown rule kind {other}"))),
    }
}

// ----------------------------------------------------------- generators

/// A generated instance of either engine, ready to serialize.
#[derive(Debug, Clone)]
pub enum Instance {
    Parity(ParityInstance),
    Mdp(MdpInstance),
}

impl Instance {
    pub fn family(&self) -> String {
        self.meta()
            .pointer("/family")
            .and_then(|v| v.as_str())
            .unwrap_or("unknown")
            .to_string()
    }

    pub fn meta(&self) -> &Value {
        match self {
            Instance::Parity(p) => &p.meta,
            Instance::Mdp(m) => &m.meta,
        }
    }

    pub fn to_doc(&self) -> Value {
        match self {
            Instance::Parity(p) => {
                let mut meta = p.meta.clone();
                meta["kind"] = json!("parity");
                if meta.pointer("/initial_strategy").is_none() {
                    let map: BTreeMap<String, String> = p
                        .initial
                        .choice
                        .iter()
                        .map(|(&v, &w)| (p.game.names[v].clone(), p.game.names[w].clone()))
                        .collect();
                    meta["initial_strategy"] = serde_json::to_value(map).unwrap();
                }
                serde_json::to_value(parity_to_doc(&p.game, Some(meta))).unwrap()
            }
            Instance::Mdp(m) => {
                let mut meta = m.meta.clone();
                meta["kind"] = json!("mdp");
                let initial: BTreeMap<String, String> = m
                    .initial
                    .choice
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != m.mdp.sink)
                    .map(|(s, &a)| (m.mdp.state_names[s].clone(), m.mdp.actions[a].name.clone()))
                    .collect();
                meta["initial_policy"] = serde_json::to_value(initial).unwrap();
                serde_json::to_value(mdp_to_doc(&m.mdp, Some(meta))).unwrap()
            }
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Instance::Parity(p) => p.game.player0_edge_count() as u64,
            Instance::Mdp(m) => m.mdp.actions.len() as u64,
        }
    }
}

/// Builds an instance from a family name and a JSON parameter object.
pub fn generate(family: &str, params: &Value) -> Result<Instance, HarnessError> {
    let get_u64 = |key: &str| -> Result<u64, HarnessError> {
        params
            .pointer(&format!("/{key}"))
            .and_then(|v| v.as_u64())
            .ok_or_else(|| HarnessError::Spec(format!("{family} needs parameter {key}")))
    };
    match family {
        "parity-counter" => {
            let n = get_u64("n")? as usize;
            if n < 1 {
                return Err(GenError::Precondition("counter needs n >= 1".into()).into());
            }
            let (game, initial) = counter_game_with_strategy(n);
            let meta = counter_meta(&game, &initial, n);
            Ok(Instance::Parity(ParityInstance { game, initial, meta }))
        }
        "parity-adversarial" => {
            let m_i = get_u64("m_i")?;
            let l_i = get_u64("l_i")?;
            let sel_spec = params
                .pointer("/selector")
                .ok_or_else(|| HarnessError::Spec("parity-adversarial needs a selector".into()))?;
            let rule = rule_from_spec(sel_spec)?;
            let PivotRule::IndexSelector { selector } = rule else {
                return Err(HarnessError::Spec(
                    "selector spec must be an index selector".into(),
                ));
            };
            Ok(Instance::Parity(build_adversarial_parity(&selector, m_i, l_i)?))
        }
        "parity-controlled" => {
            let n = get_u64("n")? as usize;
            let (mut game, mut initial) = counter_game_with_strategy(n);
            let m = game.player0_edge_count() as u64;
            let mut controllers = Vec::new();
            for e in 1..=m {
                let (g2, s2, info) = gadget_controller(&game, &initial, e)?;
                game = g2;
                initial = s2;
                controllers.push(info);
            }
            let mut meta = counter_meta(&game, &initial, n);
            meta["family"] = json!("parity-controlled");
            meta["controllers"] = serde_json::to_value(&controllers).unwrap();
            Ok(Instance::Parity(ParityInstance { game, initial, meta }))
        }
        "parity-delayed" => {
            let n = get_u64("n")? as usize;
            let k = get_u64("k")?;
            if n < 2 {
                return Err(GenError::Precondition("delayed counter needs n >= 2".into()).into());
            }
            let (game, initial) = counter_game_with_strategy(n);
            let (game, initial, info) = gadget_delayer(&game, &initial, "a1", k, "b2", "a2")?;
            let mut meta = counter_meta(&game, &initial, n);
            meta["family"] = json!("parity-delayed");
            meta["delayer"] = serde_json::to_value(&info).unwrap();
            Ok(Instance::Parity(ParityInstance { game, initial, meta }))
        }
        "parity-filler" => {
            let n = get_u64("n")? as usize;
            let position = get_u64("position")?;
            let (game, initial) = counter_game_with_strategy(n);
            let (game, initial, info) = gadget_filler(&game, &initial, position)?;
            let mut meta = counter_meta(&game, &initial, n);
            meta["family"] = json!("parity-filler");
            meta["fillers"] = serde_json::to_value(vec![info]).unwrap();
            Ok(Instance::Parity(ParityInstance { game, initial, meta }))
        }
        "mdp-counter" => {
            let l = get_u64("L")?;
            let eps = parse_epsilon(params)?;
            Ok(Instance::Mdp(gen_mdp_counter(l, eps)?))
        }
        "mdp-copied" => {
            let l = get_u64("L")?;
            let k = get_u64("k")?;
            let eps = parse_epsilon(params)?;
            let base = gen_mdp_counter(l, eps)?;
            Ok(Instance::Mdp(gen_mdp_copied(&base, k)?))
        }
        "mdp-delta" => {
            let l = get_u64("L")?;
            let m = params.pointer("/M").and_then(|v| v.as_u64());
            Ok(Instance::Mdp(gen_mdp_delta(l, m)?))
        }
        "mdp-gamma" => {
            let l = get_u64("L")?;
            let m = get_u64("M")?;
            let m_i = get_u64("m_i")?;
            let f_spec = params
                .pointer("/f")
                .ok_or_else(|| HarnessError::Spec("mdp-gamma needs an f spec".into()))?;
            let rule = rule_from_spec(f_spec)?;
            let PivotRule::F { picker } = rule else {
                return Err(HarnessError::Spec("mdp-gamma's f spec must be an f rule".into()));
            };
            Ok(Instance::Mdp(gen_mdp_gamma(l, m, &picker, m_i)?))
        }
        other => Err(HarnessError::Spec(format!("unknown family {other}"))),
    }
}

fn parse_epsilon(params: &Value) -> Result<Option<Rational>, HarnessError> {
    match params.pointer("/epsilon") {
        None => Ok(None),
        Some(Value::String(s)) if s == "auto" => Ok(None),
        Some(Value::String(s)) => Ok(Some(rat_from_str(s).map_err(HarnessError::Spec)?)),
        Some(Value::Number(n)) => Ok(Some(
            rat_from_str(&n.to_string()).map_err(HarnessError::Spec)?,
        )),
        Some(_) => Err(HarnessError::Spec("bad epsilon".into())),
    }
}

fn counter_meta(game: &SinkParityGame, initial: &Strategy, n: usize) -> Value {
    let initial_strategy: BTreeMap<String, String> = initial
        .choice
        .iter()
        .map(|(&v, &w)| (game.names[v].clone(), game.names[w].clone()))
        .collect();
    let mut named = BTreeMap::new();
    for v in ["a1", "b1"] {
        if game.vertex_by_name(v).is_some() {
            named.insert(v.to_string(), v.to_string());
        }
    }
    json!({
        "family": "parity-counter",
        "n": n,
        "named": named,
        "initial_strategy": initial_strategy,
    })
}

/// Loads an instance document (parity or MDP, detected by shape).
pub fn load_instance(doc: &Value) -> Result<Instance, HarnessError> {
    if doc.pointer("/player0").is_some() {
        let gdoc: ParityGameDoc = serde_json::from_value(doc.clone())?;
        let game = doc_to_parity(&gdoc)?;
        let meta = gdoc.metadata.clone().unwrap_or_else(|| json!({}));
        let initial = strategy_from_meta(&game, &meta)?;
        Ok(Instance::Parity(ParityInstance { game, initial, meta }))
    } else if doc.pointer("/states").is_some() {
        let mdoc: MdpDoc = serde_json::from_value(doc.clone())?;
        let mdp = doc_to_mdp(&mdoc)?;
        let meta = mdoc.metadata.clone().unwrap_or_else(|| json!({}));
        let initial = policy_from_meta(&mdp, &meta)?;
        Ok(Instance::Mdp(MdpInstance { mdp, initial, meta }))
    } else {
        Err(HarnessError::Spec("unrecognized instance document".into()))
    }
}

// -------------------------------------------------------------- running

/// Runs the matching engine on an instance, recording tiers on request and
/// the watch pairs the instance's metadata names.
pub fn run_instance(
    inst: &Instance,
    rule: &PivotRule,
    cap: u64,
    record_tiers: bool,
) -> Result<RunTrace, HarnessError> {
    run_instance_with(inst, rule, cap, record_tiers, false)
}

/// Like `run_instance`, optionally recording full exact valuations per row.
pub fn run_instance_with(
    inst: &Instance,
    rule: &PivotRule,
    cap: u64,
    record_tiers: bool,
    record_valuations: bool,
) -> Result<RunTrace, HarnessError> {
    let mut opts = TraceOptions::with_cap(cap);
    opts.record_tiers = record_tiers;
    opts.record_valuations = record_valuations;
    let meta = inst.meta();
    if let (Some(a1), Some(b1)) = (
        meta.pointer("/named/a1").and_then(|v| v.as_str()),
        meta.pointer("/named/b1").and_then(|v| v.as_str()),
    ) {
        opts.watch_pairs.push(WatchPair {
            label: "alternation".into(),
            first: a1.to_string(),
            second: b1.to_string(),
        });
    }
    if let Some(d) = meta.pointer("/delayer") {
        if let (Some(x), Some(y)) = (
            d.pointer("/x").and_then(|v| v.as_str()),
            d.pointer("/y").and_then(|v| v.as_str()),
        ) {
            opts.watch_pairs.push(WatchPair {
                label: "flip".into(),
                first: x.to_string(),
                second: y.to_string(),
            });
        }
    }
    let mut trace = match inst {
        Instance::Parity(p) => strategy_improvement(&p.game, &p.initial, rule, &opts)?.0,
        Instance::Mdp(m) => policy_iteration(&m.mdp, &m.initial, rule, &opts)?.0,
    };
    trace.instance_meta = Some(inst.to_doc());
    Ok(trace)
}

/// Runs the simplex method on an LP document with the initial basis named
/// in its metadata (1-based variable indices).
pub fn run_lp(doc: &LpDoc, rule: &PivotRule, cap: u64) -> Result<RunTrace, HarnessError> {
    let lp = doc_to_lp(doc)?;
    let basis = doc
        .metadata
        .as_ref()
        .and_then(|m| m.pointer("/initial_basis"))
        .and_then(|v| v.as_array())
        .ok_or_else(|| HarnessError::Spec("LP document needs metadata.initial_basis".into()))?
        .iter()
        .map(|v| {
            v.as_u64()
                .filter(|&x| x >= 1)
                .map(|x| x as usize - 1)
                .ok_or_else(|| HarnessError::Spec("bad basis index".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let opts = TraceOptions::with_cap(cap);
    let (trace, _) = simplex(&lp, &Basis::new(basis), rule, &opts)?;
    Ok(trace)
}

/// One CSV summary row with the fixed column set
/// `family,params,rule,n_or_L,edges_or_actions,iterations,optimal,audits`.
pub fn csv_row(
    inst: &Instance,
    params: &Value,
    rule: &PivotRule,
    trace: &RunTrace,
    audits: &str,
) -> String {
    let n_or_l = inst
        .meta()
        .pointer("/n")
        .or_else(|| inst.meta().pointer("/L"))
        .or_else(|| inst.meta().pointer("/m_i"))
        .map(|v| v.to_string())
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{}",
        inst.family(),
        serde_json::to_string(params)
            .unwrap_or_default()
            .replace(',', ";"),
        rule.name(),
        n_or_l,
        inst.size(),
        trace.iterations,
        trace.reached_optimum(),
        audits
    )
}

pub const CSV_HEADER: &str = "family,params,rule,n_or_L,edges_or_actions,iterations,optimal,audits";
