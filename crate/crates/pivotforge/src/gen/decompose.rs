//! The clustered-or-dispersed dichotomy for selector output sequences.
//!
//! `decompose` constructively produces, for any sequence over `[m]` of
//! length at most `l` (with `m >= 4l`), either a clustered or a dispersed
//! certificate. The verifiers transcribe the two definitions literally and
//! share no code with the constructor; the construction is correct exactly
//! when the matching verifier accepts, which the exhaustive tests and the
//! acceptance suite check.

use serde::{Deserialize, Serialize};

use super::GenError;

/// Intervals are `(p, q)` meaning `[p, p+q]`, 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteredCertificate {
    pub intervals: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispersedCertificate {
    pub psi: u64,
    pub xi: u64,
    pub intervals: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum Certificate {
    Clustered(ClusteredCertificate),
    Dispersed(DispersedCertificate),
}

fn check_preconditions(seq: &[u64], m: u64, l: u64) -> Result<(), GenError> {
    if m < 4 * l {
        return Err(GenError::Precondition(format!("need m >= 4*l, got m={m}, l={l}")));
    }
    if seq.len() as u64 > l {
        return Err(GenError::Precondition(format!(
            "sequence length {} exceeds l={l}",
            seq.len()
        )));
    }
    if seq.is_empty() {
        return Err(GenError::Precondition("sequence must be nonempty".into()));
    }
    if seq.iter().any(|&i| i < 1 || i > m) {
        return Err(GenError::Precondition(format!("sequence values must lie in [1,{m}]")));
    }
    Ok(())
}

fn intervals_disjoint_in_range(intervals: &[(u64, u64)], m: u64) -> bool {
    let mut sorted = intervals.to_vec();
    sorted.sort();
    for &(p, q) in &sorted {
        if p < 1 || p + q > m {
            return false;
        }
    }
    sorted.windows(2).all(|w| w[0].0 + w[0].1 < w[1].0)
}

fn in_interval(v: u64, (p, q): (u64, u64)) -> bool {
    v >= p && v <= p + q
}

/// Literal transcription of the clustered conditions.
pub fn verify_clustered(cert: &ClusteredCertificate, seq: &[u64], m: u64, l: u64) -> bool {
    let lp = seq.len() as u64;
    if lp > l || seq.iter().any(|&i| i < 1 || i > m) {
        return false;
    }
    let d = m / (2 * l);
    // (i) pairwise disjoint, contained in [1,m], union contains I
    if !intervals_disjoint_in_range(&cert.intervals, m) {
        return false;
    }
    if !seq.iter().all(|&i| cert.intervals.iter().any(|&iv| in_interval(i, iv))) {
        return false;
    }
    // (ii) per interval: q+1 >= floor(m/2l) * min(front span, back span) of K_c
    for &(p, q) in &cert.intervals {
        let k_c: Vec<u64> = seq.iter().copied().filter(|&i| in_interval(i, (p, q))).collect();
        let (Some(&max_k), Some(&min_k)) = (k_c.iter().max(), k_c.iter().min()) else {
            continue;
        };
        let front = max_k - p + 1;
        let back = p + q - min_k + 1;
        if q + 1 < d * front.min(back) {
            return false;
        }
    }
    // (iii) total interval mass plus slack fits in m
    let mass: u64 = cert.intervals.iter().map(|&(_, q)| q + 1).sum();
    mass + 2 * (l - lp) <= m
}

/// Literal transcription of the dispersed conditions.
pub fn verify_dispersed(cert: &DispersedCertificate, seq: &[u64], m: u64, l: u64) -> bool {
    let lp = seq.len() as u64;
    if lp > l || seq.iter().any(|&i| i < 1 || i > m) {
        return false;
    }
    let d = m / (2 * l);
    let psi_iv = (cert.psi, cert.xi);
    let mut all = vec![psi_iv];
    all.extend_from_slice(&cert.intervals);
    // (i) disjoint, in range, covering I
    if !intervals_disjoint_in_range(&all, m) {
        return false;
    }
    if !seq.iter().all(|&i| all.iter().any(|&iv| in_interval(i, iv))) {
        return false;
    }
    // (ii) each plain interval is at least twice its hit count, minus one
    for &(p, q) in &cert.intervals {
        let hits = seq.iter().filter(|&&i| in_interval(i, (p, q))).count() as u64;
        if hits > 0 && q + 1 < 2 * hits {
            return false;
        }
    }
    // (iii) K is exactly {psi} or exactly {psi + xi}
    let k_set: std::collections::BTreeSet<u64> = seq
        .iter()
        .copied()
        .filter(|&i| in_interval(i, psi_iv))
        .collect();
    if k_set.len() != 1 {
        return false;
    }
    let k_val = *k_set.iter().next().unwrap();
    if k_val != cert.psi && k_val != cert.psi + cert.xi {
        return false;
    }
    // (iv) the big interval scales with the number of hits in K
    let k_hits = seq.iter().filter(|&&i| i == k_val).count() as u64;
    if cert.xi < d * k_hits - 1 {
        return false;
    }
    // (v) total mass plus slack fits in m
    let mass: u64 = all.iter().map(|&(_, q)| q + 1).sum();
    mass + 2 * (l - lp) <= m
}

pub fn verify(cert: &Certificate, seq: &[u64], m: u64, l: u64) -> bool {
    match cert {
        Certificate::Clustered(c) => verify_clustered(c, seq, m, l),
        Certificate::Dispersed(c) => verify_dispersed(c, seq, m, l),
    }
}

/// Disjoint intervals over `[lo, hi]`, each of length exactly twice its hit
/// count, jointly containing every element. Elements come with
/// multiplicity. Searches contiguous-block partitions of the sorted
/// positions; windows here are small.
fn doubling_intervals(elements: &[u64], lo: u64, hi: u64) -> Result<Vec<(u64, u64)>, GenError> {
    if elements.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = elements.to_vec();
    sorted.sort();
    let unique: Vec<u64> = {
        let mut u = sorted.clone();
        u.dedup();
        u
    };
    let count_of = |v: u64| sorted.iter().filter(|&&x| x == v).count() as u64;
    let u = unique.len();
    // enumerate partitions of `unique` into consecutive blocks
    let cuts = u - 1;
    for mask in 0..(1u64 << cuts) {
        let mut blocks: Vec<Vec<u64>> = vec![vec![unique[0]]];
        for i in 0..cuts {
            if mask & (1 << i) != 0 {
                blocks.push(Vec::new());
            }
            blocks.last_mut().unwrap().push(unique[i + 1]);
        }
        // place blocks left to right
        let mut placed: Vec<(u64, u64)> = Vec::new();
        let mut prev_end: u64 = lo.saturating_sub(1);
        let mut ok = true;
        for block in &blocks {
            let min_e = block[0];
            let max_e = *block.last().unwrap();
            let c: u64 = block.iter().map(|&v| count_of(v)).sum();
            let len = 2 * c;
            // start must leave room for the span and stay right of prev
            let lowest = (max_e + 1).saturating_sub(len).max(prev_end + 1).max(lo);
            if lowest > min_e {
                ok = false;
                break;
            }
            let start = lowest;
            let end = start + len - 1;
            if end > hi {
                ok = false;
                break;
            }
            placed.push((start, len - 1));
            prev_end = end;
        }
        if ok {
            return Ok(placed);
        }
    }
    Err(GenError::Construction(format!(
        "no doubling placement for {} elements in [{lo},{hi}]",
        elements.len()
    )))
}

/// Constructive decomposition following the recursive case analysis.
pub fn decompose(seq: &[u64], m: u64, l: u64) -> Result<Certificate, GenError> {
    check_preconditions(seq, m, l)?;
    let cert = decompose_rec(seq, m, l)?;
    if !verify(&cert, seq, m, l) {
        return Err(GenError::Construction(format!(
            "constructed certificate fails its verifier: {cert:?} for seq {seq:?}, m={m}, l={l}"
        )));
    }
    Ok(cert)
}

fn shift_intervals(intervals: &[(u64, u64)], offset: u64) -> Vec<(u64, u64)> {
    intervals.iter().map(|&(p, q)| (p + offset, q)).collect()
}

fn decompose_rec(seq: &[u64], m: u64, l: u64) -> Result<Certificate, GenError> {
    let d = m / (2 * l);
    let lp = seq.len() as u64;
    debug_assert!(d >= 2);

    if seq.len() == 1 {
        let i1 = seq[0];
        let (psi, xi) = if i1 <= d {
            (i1, d - 1)
        } else {
            (i1 - d + 1, d - 1)
        };
        return Ok(Certificate::Dispersed(DispersedCertificate {
            psi,
            xi,
            intervals: Vec::new(),
        }));
    }

    let min_i = *seq.iter().min().unwrap();
    let max_i = *seq.iter().max().unwrap();
    let lambda = seq.iter().filter(|&&v| v == min_i).count() as u64;
    let lambda_p = seq.iter().filter(|&&v| v == max_i).count() as u64;

    // one cluster pinned to an end of [1, m]
    if max_i <= 2 * lp {
        return Ok(Certificate::Clustered(ClusteredCertificate {
            intervals: vec![(1, 2 * d * lp - 1)],
        }));
    }
    if min_i >= m - 2 * lp + 1 {
        return Ok(Certificate::Clustered(ClusteredCertificate {
            intervals: vec![(m - 2 * d * lp + 1, 2 * d * lp - 1)],
        }));
    }

    // a sparse minimum: hang the big interval below it, double the rest
    if lambda * d < min_i && min_i < m - 2 * lp + 1 {
        let rest: Vec<u64> = seq.iter().copied().filter(|&v| v != min_i).collect();
        let intervals = doubling_intervals(&rest, min_i + 1, m)?;
        return Ok(Certificate::Dispersed(DispersedCertificate {
            psi: min_i - lambda * d + 1,
            xi: lambda * d - 1,
            intervals,
        }));
    }

    // a sparse maximum: big interval above it
    if 2 * lp < max_i && max_i + lambda_p * d - 1 <= m {
        let rest: Vec<u64> = seq.iter().copied().filter(|&v| v != max_i).collect();
        let intervals = doubling_intervals(&rest, 1, max_i - 1)?;
        return Ok(Certificate::Dispersed(DispersedCertificate {
            psi: max_i,
            xi: lambda_p * d - 1,
            intervals,
        }));
    }

    // both ends are crowded: split at a fixed point of eta -> |{c: i_c <= 2 d eta}|
    let f = |eta: u64| seq.iter().filter(|&&v| v <= 2 * d * eta).count() as u64;
    let eta_star = (lambda..=lp.saturating_sub(lambda_p))
        .find(|&eta| f(eta) == eta)
        .ok_or_else(|| GenError::Construction("no fixed point for the split".into()))?;
    let split = 2 * d * eta_star;
    let left_seq: Vec<u64> = seq.iter().copied().filter(|&v| v <= split).collect();
    let right_seq: Vec<u64> = seq.iter().copied().filter(|&v| v > split).map(|v| v - split).collect();
    debug_assert_eq!(left_seq.len() as u64, eta_star);
    debug_assert!(!left_seq.is_empty() && !right_seq.is_empty());

    let left = decompose_rec(&left_seq, split, eta_star)?;
    let right = decompose_rec(&right_seq, m - split, l - eta_star)?;

    Ok(match (left, right) {
        (Certificate::Clustered(lc), Certificate::Clustered(rc)) => {
            let mut intervals = lc.intervals;
            intervals.extend(shift_intervals(&rc.intervals, split));
            Certificate::Clustered(ClusteredCertificate { intervals })
        }
        (Certificate::Clustered(lc), Certificate::Dispersed(rd)) => {
            let mut intervals = lc.intervals;
            intervals.extend(shift_intervals(&rd.intervals, split));
            Certificate::Dispersed(DispersedCertificate {
                psi: rd.psi + split,
                xi: rd.xi,
                intervals,
            })
        }
        (Certificate::Dispersed(ld), Certificate::Clustered(rc)) => {
            let mut intervals = ld.intervals;
            intervals.extend(shift_intervals(&rc.intervals, split));
            Certificate::Dispersed(DispersedCertificate {
                psi: ld.psi,
                xi: ld.xi,
                intervals,
            })
        }
        (Certificate::Dispersed(ld), Certificate::Dispersed(rd)) => {
            // demote the right dispersal's big interval to a plain one
            let mut intervals = ld.intervals;
            intervals.extend(shift_intervals(&rd.intervals, split));
            intervals.push((rd.psi + split, rd.xi));
            Certificate::Dispersed(DispersedCertificate {
                psi: ld.psi,
                xi: ld.xi,
                intervals,
            })
        }
    })
}

/// All sequences over `[m]` with length in `1..=len`.
pub fn all_sequences(m: u64, len: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<u64>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for v in 1..=m {
                let mut s = prefix.clone();
                s.push(v);
                out.push(s.clone());
                next.push(s);
            }
        }
        frontier = next;
    }
    out
}
