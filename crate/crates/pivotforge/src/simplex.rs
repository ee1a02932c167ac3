//! Exact-rational simplex in equality form with pluggable pivot rules.
//!
//! The scope is non-degenerate programs: a tie or a zero step in the ratio
//! test is a hard error, never silently resolved, because the lower-bound
//! generators guarantee non-degeneracy and a degenerate step would mask a
//! construction bug. The basis inverse is recomputed by exact elimination
//! at every step.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::{rank, Elimination};
use crate::num::{rat_to_string, Rational};
use crate::rules::{BlandId, PivotRule, RankingKind, RankingScope, RuleError, TotalPreorder};
use crate::trace::{fnv1a64, RunTrace, TerminalStatus, TraceOptions, TraceRow};

/// `max c^T x` subject to `A x = b`, `x >= 0`, with `A` of full row rank.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

/// A set of `m` column indices (0-based) whose columns are invertible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub indices: Vec<usize>,
}

impl Basis {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort();
        Self { indices }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("invalid linear program: {0:?}")]
    InvalidLp(Vec<String>),
    #[error("basis columns are singular")]
    SingularBasis,
    #[error("entering index {0} is not improving")]
    NotImproving(usize),
    #[error("unbounded in the entering direction")]
    Unbounded,
    #[error("degenerate step")]
    Degenerate,
    #[error("no feasible basis exists")]
    Infeasible,
    #[error("instance too large for exhaustive enumeration")]
    TooLarge,
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("iteration cap of {0} exceeded")]
    CapExceeded(u64),
}

impl LinearProgram {
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        self.a.iter().map(|row| row[j].clone()).collect()
    }

    pub fn objective(&self, x: &[Rational]) -> Rational {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

pub fn validate_lp(lp: &LinearProgram) -> Vec<String> {
    let mut errs = Vec::new();
    let m = lp.rows();
    let n = lp.cols();
    if lp.b.len() != m {
        errs.push("b length disagrees with row count".into());
    }
    for row in &lp.a {
        if row.len() != n {
            errs.push("ragged constraint matrix".into());
        }
    }
    if m > n {
        errs.push("more constraints than variables".into());
    }
    if errs.is_empty() && rank(&lp.a) != m {
        errs.push("constraint matrix does not have full row rank".into());
    }
    errs
}

fn basis_elimination(lp: &LinearProgram, basis: &Basis) -> Result<Elimination, SimplexError> {
    let m = lp.rows();
    if basis.indices.len() != m {
        return Err(SimplexError::InvalidLp(vec![format!(
            "basis has {} indices, expected {m}",
            basis.indices.len()
        )]));
    }
    let cols: Vec<Vec<Rational>> = (0..m)
        .map(|i| basis.indices.iter().map(|&j| lp.a[i][j].clone()).collect())
        .collect();
    Elimination::new(&cols).ok_or(SimplexError::SingularBasis)
}

/// The unique `x` with `Ax = b` and zero off-basis entries, plus its
/// feasibility flag.
pub fn bfs_from_basis(
    lp: &LinearProgram,
    basis: &Basis,
) -> Result<(Vec<Rational>, bool), SimplexError> {
    let elim = basis_elimination(lp, basis)?;
    let xb = elim.solve(&lp.b);
    let mut x = vec![Rational::zero(); lp.cols()];
    for (i, &j) in basis.indices.iter().enumerate() {
        x[j] = xb[i].clone();
    }
    let feasible = xb.iter().all(|v| !v.is_negative());
    Ok((x, feasible))
}

/// Exact reduced costs for all non-basis indices, as `(column, rc)` pairs.
/// Also asserts that every basic variable prices out to zero.
pub fn reduced_costs(
    lp: &LinearProgram,
    basis: &Basis,
) -> Result<Vec<(usize, Rational)>, SimplexError> {
    let elim = basis_elimination(lp, basis)?;
    let cb: Vec<Rational> = basis.indices.iter().map(|&j| lp.c[j].clone()).collect();
    let y = elim.solve_transposed(&cb);
    let mut out = Vec::new();
    for j in 0..lp.cols() {
        let mut rc = lp.c[j].clone();
        for (i, row) in lp.a.iter().enumerate() {
            rc -= &y[i] * &row[j];
        }
        if basis.contains(j) {
            assert!(rc.is_zero(), "basic variable {j} has nonzero reduced cost");
        } else {
            out.push((j, rc));
        }
    }
    Ok(out)
}

/// Improving columns (positive reduced cost), as 1-based Bland ids.
pub fn improving_columns(lp: &LinearProgram, basis: &Basis) -> Result<Vec<BlandId>, SimplexError> {
    Ok(reduced_costs(lp, basis)?
        .into_iter()
        .filter(|(_, rc)| rc.is_positive())
        .map(|(j, _)| j as BlandId + 1)
        .collect())
}

struct PivotStep {
    next: Basis,
    leaving: usize,
    /// Step length along the entering direction.
    theta: Rational,
    /// Full-length direction of the move (entering component = 1).
    direction: Vec<Rational>,
}

fn pivot_step(lp: &LinearProgram, basis: &Basis, entering: usize) -> Result<PivotStep, SimplexError> {
    let elim = basis_elimination(lp, basis)?;
    let (x, feasible) = bfs_from_basis(lp, basis)?;
    assert!(feasible, "pivot from an infeasible basis");
    let d = elim.solve(&lp.column(entering));
    // x_B(theta) = x_B - theta * d ; leaving row by exact minimum ratio
    let mut best: Option<(Rational, usize)> = None;
    let mut tie = false;
    for (i, &j) in basis.indices.iter().enumerate() {
        if d[i].is_positive() {
            let ratio = &x[j] / &d[i];
            match &best {
                None => best = Some((ratio, i)),
                Some((cur, _)) => {
                    if ratio < *cur {
                        best = Some((ratio, i));
                        tie = false;
                    } else if ratio == *cur {
                        tie = true;
                    }
                }
            }
        }
    }
    let Some((theta, row)) = best else {
        return Err(SimplexError::Unbounded);
    };
    if tie || theta.is_zero() {
        return Err(SimplexError::Degenerate);
    }
    let leaving = basis.indices[row];
    let mut indices = basis.indices.clone();
    indices.retain(|&j| j != leaving);
    indices.push(entering);
    let mut direction = vec![Rational::zero(); lp.cols()];
    direction[entering] = Rational::from_integer(1.into());
    for (i, &j) in basis.indices.iter().enumerate() {
        direction[j] = -d[i].clone();
    }
    Ok(PivotStep {
        next: Basis::new(indices),
        leaving,
        theta,
        direction,
    })
}

/// One simplex pivot: entering must be improving, the leaving index is
/// fixed by the exact minimum-ratio test, and a tie or zero step errors
/// out.
pub fn pivot(lp: &LinearProgram, basis: &Basis, entering: usize) -> Result<Basis, SimplexError> {
    let rc = reduced_costs(lp, basis)?;
    let improving = rc
        .iter()
        .any(|(j, r)| *j == entering && r.is_positive());
    if !improving {
        return Err(SimplexError::NotImproving(entering));
    }
    Ok(pivot_step(lp, basis, entering)?.next)
}

fn basis_hash(basis: &Basis) -> String {
    let mut bytes = Vec::new();
    for &j in &basis.indices {
        bytes.extend_from_slice(&(j as u64).to_le_bytes());
    }
    format!("{:016x}", fnv1a64(&bytes))
}

struct LpScope<'a> {
    lp: &'a LinearProgram,
    basis: &'a Basis,
    improving: Vec<BlandId>,
    rc: Vec<(usize, Rational)>,
    x: Vec<Rational>,
}

impl LpScope<'_> {
    fn rc_of(&self, col: usize) -> &Rational {
        &self
            .rc
            .iter()
            .find(|(j, _)| *j == col)
            .expect("improving column priced")
            .1
    }
}

impl RankingScope for LpScope<'_> {
    fn element_count(&self) -> u64 {
        self.lp.cols() as u64
    }

    fn improving(&self) -> &[BlandId] {
        &self.improving
    }

    fn ranking(&self, kind: &RankingKind) -> Result<TotalPreorder, RuleError> {
        let to_col = |b: BlandId| b as usize - 1;
        let step_of = |col: usize| {
            pivot_step(self.lp, self.basis, col)
                .map_err(|e| RuleError::Contract(format!("ranking needs a pivot step: {e}")))
        };
        match kind {
            RankingKind::Bland => Ok(TotalPreorder::bland(&self.improving)),
            RankingKind::Dantzig => Ok(TotalPreorder::from_scores(
                self.improving
                    .iter()
                    .map(|&b| (b, self.rc_of(to_col(b)).clone()))
                    .collect(),
            )),
            RankingKind::LargestIncrease => {
                let base = self.lp.objective(&self.x);
                let mut scored = Vec::new();
                for &b in &self.improving {
                    let col = to_col(b);
                    let step = step_of(col)?;
                    scored.push((b, &base + &step.theta * self.rc_of(col)));
                }
                Ok(TotalPreorder::from_scores(scored))
            }
            RankingKind::SteepestEdge => {
                // compare (c^T delta)^2 / ||delta||^2 exactly; c^T delta is
                // positive for improving columns, so squaring keeps the order
                let mut scored = Vec::new();
                for &b in &self.improving {
                    let col = to_col(b);
                    let step = step_of(col)?;
                    let gain: Rational = self
                        .lp
                        .c
                        .iter()
                        .zip(&step.direction)
                        .map(|(c, d)| c * d)
                        .sum();
                    let len2: Rational = step.direction.iter().map(|d| d * d).sum();
                    if len2.is_zero() {
                        return Err(RuleError::Contract(
                            "zero-length edge in steepest-edge ranking".into(),
                        ));
                    }
                    scored.push((b, &gain * &gain / len2));
                }
                Ok(TotalPreorder::from_scores(scored))
            }
            RankingKind::ShadowVertex { d } => {
                let shadow: Vec<Rational> = d
                    .iter()
                    .map(|s| {
                        crate::num::rat_from_str(s)
                            .map_err(|e| RuleError::Contract(format!("bad shadow vector: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
                if shadow.len() != self.lp.cols() {
                    return Err(RuleError::Contract(
                        "shadow vector length disagrees with variable count".into(),
                    ));
                }
                let mut scored = Vec::new();
                for &b in &self.improving {
                    let col = to_col(b);
                    let step = step_of(col)?;
                    let down: Rational = shadow
                        .iter()
                        .zip(&step.direction)
                        .map(|(d, x)| d * x)
                        .sum();
                    let up: Rational = self
                        .lp
                        .c
                        .iter()
                        .zip(&step.direction)
                        .map(|(c, x)| c * x)
                        .sum();
                    scored.push((b, down / up));
                }
                Ok(TotalPreorder::from_scores(scored))
            }
        }
    }
}

/// One rule consultation at a fixed basis, for callers that drive the loop
/// themselves (the lockstep checker does).
pub fn consult_rule(
    lp: &LinearProgram,
    basis: &Basis,
    rule: &PivotRule,
    memory: u64,
) -> Result<crate::rules::Decision, SimplexError> {
    let rc = reduced_costs(lp, basis)?;
    let improving: Vec<BlandId> = rc
        .iter()
        .filter(|(_, r)| r.is_positive())
        .map(|(j, _)| *j as BlandId + 1)
        .collect();
    let (x, feasible) = bfs_from_basis(lp, basis)?;
    assert!(feasible, "rule consulted at an infeasible basis");
    let scope = LpScope {
        lp,
        basis,
        improving,
        rc,
        x,
    };
    Ok(rule.choose(&scope, memory)?)
}

/// Runs the simplex method from a feasible basis until optimal. Objective
/// strictly increases every pivot; the basis stays feasible; exactly one
/// index enters and one leaves per step.
pub fn simplex(
    lp: &LinearProgram,
    basis0: &Basis,
    rule: &PivotRule,
    opts: &TraceOptions,
) -> Result<(RunTrace, Basis), SimplexError> {
    let errs = validate_lp(lp);
    if !errs.is_empty() {
        return Err(SimplexError::InvalidLp(errs));
    }
    let cap = if opts.cap == 0 {
        crate::trace::DEFAULT_CAP
    } else {
        opts.cap
    };
    let mut basis = basis0.clone();
    let (x0, feasible) = bfs_from_basis(lp, &basis)?;
    if !feasible {
        return Err(SimplexError::InvalidLp(vec![
            "initial basis is infeasible".into()
        ]));
    }
    let mut x = x0;
    let mut memory: u64 = 1;
    let mut rows = Vec::new();
    let mut status = TerminalStatus::Optimal;
    loop {
        let rc = reduced_costs(lp, &basis)?;
        let improving: Vec<BlandId> = rc
            .iter()
            .filter(|(_, r)| r.is_positive())
            .map(|(j, _)| *j as BlandId + 1)
            .collect();
        if improving.is_empty() {
            break;
        }
        if rows.len() as u64 >= cap {
            status = TerminalStatus::Capped;
            break;
        }
        let scope = LpScope {
            lp,
            basis: &basis,
            improving: improving.clone(),
            rc,
            x: x.clone(),
        };
        let decision = rule.choose(&scope, memory)?;
        if !improving.contains(&decision.chosen) {
            return Err(RuleError::Contract(format!(
                "rule chose non-improving variable {}",
                decision.chosen
            ))
            .into());
        }
        let entering = decision.chosen as usize - 1;
        let obj_before = lp.objective(&x);
        rows.push(TraceRow {
            iteration: rows.len() as u64 + 1,
            state_hash: basis_hash(&basis),
            improving,
            chosen: decision.chosen,
            chosen_rank: decision.chosen_rank as u64,
            memory,
            objective: rat_to_string(&obj_before),
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
            extras: Default::default(),
        });
        let step = pivot_step(lp, &basis, entering)?;
        assert_eq!(
            step.next.indices.len(),
            basis.indices.len(),
            "pivot must swap exactly one index"
        );
        assert!(
            !step.next.contains(step.leaving) && step.next.contains(entering),
            "pivot must swap exactly one index"
        );
        basis = step.next;
        let (nx, feasible) = bfs_from_basis(lp, &basis)?;
        assert!(feasible, "basis became infeasible after a pivot");
        x = nx;
        assert!(
            lp.objective(&x) > obj_before,
            "objective did not strictly increase"
        );
        memory = decision.next_memory;
    }
    let trace = RunTrace {
        rule: rule.name(),
        cap,
        status,
        iterations: rows.len() as u64,
        rows,
        final_state_hash: basis_hash(&basis),
        final_objective: rat_to_string(&lp.objective(&x)),
        final_improving: improving_columns(lp, &basis)?.len() as u64,
        final_extras: Default::default(),
        instance_meta: None,
    };
    Ok((trace, basis))
}

/// Maximum objective over all feasible bases, by exhaustive enumeration.
pub fn brute_force_optimum(lp: &LinearProgram) -> Result<Rational, SimplexError> {
    let n = lp.cols();
    let m = lp.rows();
    if n > 24 {
        return Err(SimplexError::TooLarge);
    }
    let mut best: Option<Rational> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let basis = Basis::new(subset.clone());
        if let Ok((x, true)) = bfs_from_basis(lp, &basis) {
            let obj = lp.objective(&x);
            if best.as_ref().map_or(true, |b| obj > *b) {
                best = Some(obj);
            }
        }
        // next m-combination of 0..n in lexicographic order
        let mut i = m;
        loop {
            if i == 0 {
                return best.ok_or(SimplexError::Infeasible);
            }
            i -= 1;
            if subset[i] != i + n - m {
                subset[i] += 1;
                for j in i + 1..m {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat_int;
    use crate::rules::RankPicker;

    /// max x1 s.t. x1 + x2 = 1, x >= 0
    fn trivial_lp() -> LinearProgram {
        LinearProgram {
            a: vec![vec![rat_int(1), rat_int(1)]],
            b: vec![rat_int(1)],
            c: vec![rat_int(1), rat_int(0)],
        }
    }

    #[test]
    fn bfs_examples() {
        let lp = trivial_lp();
        let (x, feasible) = bfs_from_basis(&lp, &Basis::new(vec![1])).unwrap();
        assert_eq!(x, vec![rat_int(0), rat_int(1)]);
        assert!(feasible);
        let (x, feasible) = bfs_from_basis(&lp, &Basis::new(vec![0])).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(0)]);
        assert!(feasible);
        let neg = LinearProgram {
            b: vec![rat_int(-1)],
            ..trivial_lp()
        };
        let (_, feasible) = bfs_from_basis(&neg, &Basis::new(vec![1])).unwrap();
        assert!(!feasible);
    }

    #[test]
    fn reduced_cost_examples() {
        let lp = trivial_lp();
        let rc = reduced_costs(&lp, &Basis::new(vec![1])).unwrap();
        assert_eq!(rc, vec![(0, rat_int(1))]);
        let rc = reduced_costs(&lp, &Basis::new(vec![0])).unwrap();
        assert_eq!(rc, vec![(1, rat_int(-1))]);
        assert!(improving_columns(&lp, &Basis::new(vec![0])).unwrap().is_empty());
    }

    #[test]
    fn pivot_examples() {
        let lp = trivial_lp();
        let next = pivot(&lp, &Basis::new(vec![1]), 0).unwrap();
        assert_eq!(next.indices, vec![0]);
        assert!(matches!(
            pivot(&lp, &Basis::new(vec![0]), 1),
            Err(SimplexError::NotImproving(1))
        ));
    }

    #[test]
    fn simplex_on_trivial_lp() {
        let lp = trivial_lp();
        let rule = PivotRule::greedy(RankingKind::Dantzig);
        let opts = TraceOptions::default();
        let (trace, basis) = simplex(&lp, &Basis::new(vec![1]), &rule, &opts).unwrap();
        assert_eq!(trace.iterations, 1);
        assert_eq!(basis.indices, vec![0]);
        assert_eq!(trace.final_objective, "1");
        // starting at the optimum takes zero pivots
        let (trace, _) = simplex(&lp, &Basis::new(vec![0]), &rule, &opts).unwrap();
        assert_eq!(trace.iterations, 0);
    }

    #[test]
    fn degenerate_tie_is_a_hard_error() {
        // x = (0, 1, 1) puts both basic variables at the same ratio
        let lp = LinearProgram {
            a: vec![
                vec![rat_int(1), rat_int(1), rat_int(0)],
                vec![rat_int(1), rat_int(0), rat_int(1)],
            ],
            b: vec![rat_int(1), rat_int(1)],
            c: vec![rat_int(1), rat_int(0), rat_int(0)],
        };
        assert!(matches!(
            pivot(&lp, &Basis::new(vec![1, 2]), 0),
            Err(SimplexError::Degenerate)
        ));
    }

    #[test]
    fn unbounded_direction_is_reported() {
        let lp = LinearProgram {
            a: vec![vec![rat_int(1), rat_int(-1)]],
            b: vec![rat_int(0)],
            c: vec![rat_int(1), rat_int(0)],
        };
        assert!(matches!(
            pivot(&lp, &Basis::new(vec![1]), 0),
            Err(SimplexError::Unbounded)
        ));
    }

    #[test]
    fn singular_basis_is_reported() {
        let lp = LinearProgram {
            a: vec![
                vec![rat_int(1), rat_int(2), rat_int(1)],
                vec![rat_int(2), rat_int(4), rat_int(0)],
            ],
            b: vec![rat_int(1), rat_int(1)],
            c: vec![rat_int(0), rat_int(0), rat_int(0)],
        };
        // columns 0 and 1 are parallel
        assert!(matches!(
            bfs_from_basis(&lp, &Basis::new(vec![0, 1])),
            Err(SimplexError::SingularBasis)
        ));
    }

    #[test]
    fn brute_force_on_trivial_lp() {
        let lp = trivial_lp();
        assert_eq!(brute_force_optimum(&lp).unwrap(), rat_int(1));
        let infeasible = LinearProgram {
            a: vec![vec![rat_int(1), rat_int(1)]],
            b: vec![rat_int(-1)],
            c: vec![rat_int(1), rat_int(0)],
        };
        assert!(matches!(
            brute_force_optimum(&infeasible),
            Err(SimplexError::Infeasible)
        ));
    }

    #[test]
    fn f_one_rule_runs_on_lps() {
        // max x1 + x2, x1 + s1 = 1, x2 + s2 = 1: two pivots from slack basis
        let lp = LinearProgram {
            a: vec![
                vec![rat_int(1), rat_int(0), rat_int(1), rat_int(0)],
                vec![rat_int(0), rat_int(1), rat_int(0), rat_int(1)],
            ],
            b: vec![rat_int(1), rat_int(1)],
            c: vec![rat_int(1), rat_int(2), rat_int(0), rat_int(0)],
        };
        let rule = PivotRule::f_rule(RankPicker::One);
        let (trace, basis) =
            simplex(&lp, &Basis::new(vec![2, 3]), &rule, &TraceOptions::default()).unwrap();
        assert_eq!(trace.iterations, 2);
        assert_eq!(basis.indices, vec![0, 1]);
        assert_eq!(trace.final_objective, "3");
        assert_eq!(
            brute_force_optimum(&lp).unwrap(),
            rat_int(3)
        );
    }
}
