//! Integer planners for the size-adjustment moves on vertex classes.
//!
//! Each planner returns a [`MovePlan`] with exact per-part removal counts and the
//! claimed post-state; [`apply_plan`] replays it and re-checks the lemma's postcondition.

use crate::error::{Error, Result};
use crate::params::RParams;
use crate::ratio::{q, Q};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Equalize,
    DivR,
    DivS,
    SingPart,
    Transfers,
}

impl Lemma {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "equalize" => Lemma::Equalize,
            "div-r" => Lemma::DivR,
            "div-s" => Lemma::DivS,
            "sing-part" => Lemma::SingPart,
            "transfers" => Lemma::Transfers,
            _ => return Err(Error::Parameter(format!("unknown lemma {s:?}"))),
        })
    }

    /// Default relative window.
    pub fn default_eps(&self, p: &RParams) -> Q {
        match self {
            Lemma::Equalize => q(1, 4 * p.r as i64),
            _ => q(1, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartSizes {
    pub sizes: Vec<u64>,
    pub params: RParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum MoveType {
    /// Indices are 0-based part positions.
    P { k: usize },
    #[serde(rename = "P_jk")]
    Pjk { j: usize, k: usize },
    Transfer { k: usize, k_to: usize, q: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedMove {
    #[serde(flatten)]
    pub kind: MoveType,
    pub removal: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovePlan {
    pub lemma: Lemma,
    pub moves: Vec<PlannedMove>,
    pub total_removed: u64,
    pub post: Vec<u64>,
    /// Σ|y_i| of the minimal remainder vector before each round (divisibility planners).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remainder_trace: Vec<u64>,
}

fn infeasible<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Infeasible(msg.into()))
}

fn expect_parts(sizes: &PartSizes, want: usize, what: &str) -> Result<()> {
    if sizes.sizes.len() != want {
        return Err(Error::Parameter(format!("{what} needs {want} parts, got {}", sizes.sizes.len())));
    }
    Ok(())
}

fn total(sizes: &[u64]) -> u64 {
    sizes.iter().sum()
}

fn check_divisible(m_total: u64, r: usize) -> Result<()> {
    if m_total % r as u64 != 0 {
        return infeasible(format!("total {m_total} is not divisible by r={r}"));
    }
    Ok(())
}

/// `|U_i| = M/parts · (1 ± ε)`.
fn check_window(sizes: &[u64], eps: &Q) -> Result<()> {
    let parts = sizes.len() as i64;
    let m_total = total(sizes) as i64;
    for (i, &u) in sizes.iter().enumerate() {
        let dev = (q(u as i64 * parts, 1) - q(m_total, 1)).abs();
        if dev > eps * q(m_total, 1) {
            return infeasible(format!("part {i} (size {u}) is outside the window M/{parts}·(1±{eps})"));
        }
    }
    Ok(())
}

fn removal_vec(len: usize, entries: &[(usize, u64)], rest: u64) -> Vec<u64> {
    let mut v = vec![rest; len];
    for &(i, c) in entries {
        v[i] = c;
    }
    v
}

fn finish(lemma: Lemma, sizes: &[u64], moves: Vec<PlannedMove>, remainder_trace: Vec<u64>) -> MovePlan {
    let mut post = sizes.to_vec();
    for mv in &moves {
        for (p, c) in post.iter_mut().zip(&mv.removal) {
            *p = p.saturating_sub(*c);
        }
    }
    let total_removed = moves.iter().map(|m| total(&m.removal)).sum();
    MovePlan { lemma, moves, total_removed, post, remainder_trace }
}

/// Remainders `y_i ≡ sizes_i (mod r)` in `(-r, r)` with `Σy = 0` and `Σ|y|` minimal.
pub fn minimal_remainders(sizes: &[u64], r: u64) -> Vec<i64> {
    let res: Vec<i64> = sizes.iter().map(|&u| (u % r) as i64).collect();
    let k = (res.iter().sum::<i64>() / r as i64) as usize;
    let mut order: Vec<usize> = (0..res.len()).collect();
    // shift the k largest residues down; ties resolved towards the later index
    order.sort_by_key(|&i| (std::cmp::Reverse(res[i]), std::cmp::Reverse(i)));
    let mut y = res.clone();
    for &i in &order[..k] {
        y[i] -= r as i64;
    }
    y
}

fn abs_sum(y: &[i64]) -> u64 {
    y.iter().map(|v| v.unsigned_abs()).sum()
}

/// Largest and smallest remainder, each at its first index.
fn extreme_pair(y: &[i64]) -> (usize, usize) {
    let hi = (0..y.len()).max_by_key(|&i| (y[i], std::cmp::Reverse(i))).expect("nonempty");
    let lo = (0..y.len()).min_by_key(|&i| (y[i], i)).expect("nonempty");
    (hi, lo)
}

/// Parts `S_1..S_m, T`: `x_k = (s/r)M − |S_k|` moves `P_k`, each removing `s−1` from `S_k`,
/// `s` from every other `S_i` and `t+1` from `T`.
pub fn plan_equalize(sizes: &PartSizes, eps: &Q) -> Result<MovePlan> {
    let p = &sizes.params;
    expect_parts(sizes, p.m + 1, "equalize")?;
    let m_total = total(&sizes.sizes);
    check_divisible(m_total, p.r)?;
    let share = m_total / p.r as u64 * p.s as u64;
    let lo = q(share as i64, 1) - eps * q(m_total as i64, 1);
    let mut moves = Vec::new();
    for k in 0..p.m {
        let u = sizes.sizes[k];
        if u > share {
            return infeasible(format!("part {k} (size {u}) exceeds (s/r)M = {share}"));
        }
        if q(u as i64, 1) < lo {
            return infeasible(format!("part {k} (size {u}) is below (s/r - {eps})M"));
        }
        let removal = removal_vec(p.m + 1, &[(k, p.s as u64 - 1), (p.m, p.t as u64 + 1)], p.s as u64);
        debug_assert_eq!(total(&removal), p.r as u64);
        for _ in 0..share - u {
            moves.push(PlannedMove { kind: MoveType::P { k }, removal: removal.clone() });
        }
    }
    Ok(finish(Lemma::Equalize, &sizes.sizes, moves, vec![]))
}

/// Parts `U_1..U_{m+1}`: rounds of `P_{j,k}` followed by `P_i` for every `i ≠ j`, where `j`
/// and `k` carry the largest and smallest minimal remainder.
pub fn plan_divisibility_r(sizes: &PartSizes, eps: &Q) -> Result<MovePlan> {
    let p = &sizes.params;
    let parts = p.m + 1;
    expect_parts(sizes, parts, "div-r")?;
    check_divisible(total(&sizes.sizes), p.r)?;
    check_window(&sizes.sizes, eps)?;
    let (s, t) = (p.s as u64, p.t as u64);
    let mut cur = sizes.sizes.clone();
    let mut moves = Vec::new();
    let mut trace = Vec::new();
    loop {
        let y = minimal_remainders(&cur, p.r as u64);
        let sum = abs_sum(&y);
        if let Some(&last) = trace.last() {
            if sum + 2 != last {
                return Err(Error::Validation(format!("remainder sum went {last} -> {sum}")));
            }
        }
        trace.push(sum);
        if sum == 0 {
            break;
        }
        let (j, k) = extreme_pair(&y);
        let mut round = vec![PlannedMove {
            kind: MoveType::Pjk { j, k },
            removal: removal_vec(parts, &[(j, t + 1), (k, s - 1)], s),
        }];
        for i in (0..parts).filter(|&i| i != j) {
            round.push(PlannedMove { kind: MoveType::P { k: i }, removal: removal_vec(parts, &[(i, t)], s) });
        }
        for mv in &round {
            for (c, r) in cur.iter_mut().zip(&mv.removal) {
                *c = c.checked_sub(*r).ok_or_else(|| Error::Infeasible("a part ran out of vertices".into()))?;
            }
        }
        moves.extend(round);
    }
    Ok(finish(Lemma::DivR, &sizes.sizes, moves, trace))
}

/// `r = (m+1)s`, parts `U_1..U_{m+2}`: single `P_{j,k}` moves removing `1` from `U_j`,
/// `s−1` from `U_k` and `s` from the rest, until every part is divisible by `s`.
pub fn plan_divisibility_s_singular(sizes: &PartSizes, eps: &Q) -> Result<MovePlan> {
    let p = &sizes.params;
    if p.r != (p.m + 1) * p.s {
        return Err(Error::Parameter(format!("r={} is not (m+1)s", p.r)));
    }
    let parts = p.m + 2;
    expect_parts(sizes, parts, "div-s")?;
    check_divisible(total(&sizes.sizes), p.r)?;
    check_window(&sizes.sizes, eps)?;
    let s = p.s as u64;
    let mut cur = sizes.sizes.clone();
    let mut moves = Vec::new();
    let mut trace = Vec::new();
    loop {
        let y = minimal_remainders(&cur, s);
        let sum = abs_sum(&y);
        if let Some(&last) = trace.last() {
            if sum + 2 != last {
                return Err(Error::Validation(format!("remainder sum went {last} -> {sum}")));
            }
        }
        trace.push(sum);
        if sum == 0 {
            break;
        }
        let (j, k) = extreme_pair(&y);
        let mv = PlannedMove { kind: MoveType::Pjk { j, k }, removal: removal_vec(parts, &[(j, 1), (k, s - 1)], s) };
        for (c, r) in cur.iter_mut().zip(&mv.removal) {
            *c = c.checked_sub(*r).ok_or_else(|| Error::Infeasible("a part ran out of vertices".into()))?;
        }
        moves.push(mv);
    }
    Ok(finish(Lemma::DivS, &sizes.sizes, moves, trace))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTable {
    /// `x_j = M/(m+1) − |U_j|`.
    pub x: Vec<u64>,
    /// `table[i][j] = |P_{i,j}|`, zero on the diagonal (which is not a part).
    pub table: Vec<Vec<u64>>,
}

/// Splits each `U_i` into parts `P_{i,j}`, `j ≠ i`, with `|P_{i,j}| = x_j`.
pub fn plan_singular_partition(sizes: &PartSizes, eps: &Q) -> Result<PartitionTable> {
    let p = &sizes.params;
    if p.r != (p.m + 1) * p.s {
        return Err(Error::Parameter(format!("r={} is not (m+1)s", p.r)));
    }
    let parts = p.m + 2;
    expect_parts(sizes, parts, "sing-part")?;
    let m_total = total(&sizes.sizes);
    check_divisible(m_total, p.r)?;
    check_window(&sizes.sizes, eps)?;
    if let Some(i) = sizes.sizes.iter().position(|&u| u % p.s as u64 != 0) {
        return infeasible(format!("part {i} is not divisible by s={}", p.s));
    }
    let share = m_total / (p.m as u64 + 1);
    let mut x = Vec::with_capacity(parts);
    for (j, &u) in sizes.sizes.iter().enumerate() {
        if u > share {
            return infeasible(format!("x_{j} = {share} - {u} is negative"));
        }
        x.push(share - u);
    }
    let table = (0..parts).map(|i| (0..parts).map(|j| if i == j { 0 } else { x[j] }).collect()).collect();
    Ok(PartitionTable { x, table })
}

/// Checks row sums against the sizes and the divisibility of every entry.
pub fn check_partition_table(sizes: &PartSizes, t: &PartitionTable) -> Result<()> {
    let s = sizes.params.s as u64;
    for (i, row) in t.table.iter().enumerate() {
        if row[i] != 0 || row.iter().sum::<u64>() != sizes.sizes[i] {
            return Err(Error::Validation(format!("row {i} does not sum to |U_{i}|")));
        }
        if row.iter().any(|&e| e % s != 0) {
            return Err(Error::Validation(format!("row {i} has an entry not divisible by s")));
        }
        for (j, &e) in row.iter().enumerate() {
            if i != j && e != t.x[j] {
                return Err(Error::Validation(format!("|P_{i},{j}| differs from x_{j}")));
            }
        }
    }
    Ok(())
}

/// `(k, k')`-transfers: one basic move taking `1` from part `k` and `r−1` from an auxiliary
/// part `q`, then `r−1` basic moves taking `1` from `k'` and `r−1` from `q` each. Modulo `r`
/// this lowers `k` by one, raises `k'` by one and fixes `q`.
pub fn plan_transfers(sizes: &PartSizes) -> Result<MovePlan> {
    let r = sizes.params.r as u64;
    let parts = sizes.sizes.len();
    if parts < 3 {
        return infeasible("transfers need at least 3 parts for an auxiliary index");
    }
    check_divisible(total(&sizes.sizes), sizes.params.r)?;
    let mut y = minimal_remainders(&sizes.sizes, r);
    let trace = vec![abs_sum(&y)];
    let mut moves = Vec::new();
    while abs_sum(&y) > 0 {
        let (k, k_to) = extreme_pair(&y);
        let qx = (0..parts).find(|&i| i != k && i != k_to).expect("three parts");
        let removal = removal_vec(parts, &[(k, 1), (k_to, r - 1), (qx, r * (r - 1))], 0);
        moves.push(PlannedMove { kind: MoveType::Transfer { k, k_to, q: qx }, removal });
        y[k] -= 1;
        y[k_to] += 1;
    }
    Ok(finish(Lemma::Transfers, &sizes.sizes, moves, trace))
}

pub fn plan(lemma: Lemma, sizes: &PartSizes, eps: &Q) -> Result<MovePlan> {
    match lemma {
        Lemma::Equalize => plan_equalize(sizes, eps),
        Lemma::DivR => plan_divisibility_r(sizes, eps),
        Lemma::DivS => plan_divisibility_s_singular(sizes, eps),
        Lemma::Transfers => plan_transfers(sizes),
        Lemma::SingPart => Err(Error::Parameter("sing-part produces a table, not a move plan".into())),
    }
}

/// Replays `plan` move by move, then checks the claimed post-state and the lemma's
/// postcondition and removal bound.
pub fn apply_plan(sizes: &PartSizes, plan: &MovePlan) -> Result<PartSizes> {
    let p = &sizes.params;
    let mut cur = sizes.sizes.clone();
    for (idx, mv) in plan.moves.iter().enumerate() {
        if mv.removal.len() != cur.len() {
            return Err(Error::Validation(format!("move {idx} has {} entries for {} parts", mv.removal.len(), cur.len())));
        }
        let removed = total(&mv.removal);
        let expect = match (plan.lemma, mv.kind) {
            (Lemma::Transfers, MoveType::Transfer { .. }) => (p.r * p.r) as u64,
            (Lemma::Transfers, _) | (_, MoveType::Transfer { .. }) => {
                return Err(Error::Validation(format!("move {idx} does not belong to this lemma")));
            }
            _ => p.r as u64,
        };
        if removed != expect {
            return Err(Error::Validation(format!("move {idx} removes {removed} vertices, expected {expect}")));
        }
        for (i, (c, r)) in cur.iter_mut().zip(&mv.removal).enumerate() {
            *c = c.checked_sub(*r).ok_or_else(|| Error::Validation(format!("move {idx} overdraws part {i}")))?;
        }
    }
    if cur != plan.post {
        return Err(Error::Validation(format!("replay gives {cur:?}, plan claims {:?}", plan.post)));
    }
    let removed = total(&sizes.sizes) - total(&cur);
    if removed != plan.total_removed {
        return Err(Error::Validation("total removal mismatch".into()));
    }
    let (m, r, s, t) = (p.m as u64, p.r as u64, p.s as u64, p.t as u64);
    match plan.lemma {
        Lemma::Equalize => {
            let tt = cur[p.m];
            if cur[..p.m].iter().any(|&u| u * t != s * tt || u != cur[0]) {
                return Err(Error::Validation(format!("post-state {cur:?} misses the s:t ratio")));
            }
        }
        Lemma::DivR => {
            if cur.iter().any(|&u| u % r != 0) {
                return Err(Error::Validation(format!("post-state {cur:?} is not divisible by r")));
            }
            if removed > (m + 1) * (m + 1) * r * r {
                return Err(Error::Validation(format!("removed {removed} > (m+1)²r²")));
            }
        }
        Lemma::DivS => {
            if cur.iter().any(|&u| u % s != 0) {
                return Err(Error::Validation(format!("post-state {cur:?} is not divisible by s")));
            }
            if removed > (m + 2) * s * s {
                return Err(Error::Validation(format!("removed {removed} > (m+2)s²")));
            }
        }
        Lemma::Transfers => {
            if cur.iter().any(|&u| u % r != 0) {
                return Err(Error::Validation(format!("post-state {cur:?} is not divisible by r")));
            }
            if plan.moves.len() as u64 > r * cur.len() as u64 {
                return Err(Error::Validation("more than r·L transfers".into()));
            }
        }
        Lemma::SingPart => return Err(Error::Parameter("sing-part has no move plan".into())),
    }
    Ok(PartSizes { sizes: cur, params: *p })
}

/// `mrεM`, the equalize removal bound, as an integer floor.
pub fn equalize_bound(p: &RParams, eps: &Q, m_total: u64) -> u64 {
    let b = q((p.m * p.r) as i64, 1) * eps * q(m_total as i64, 1);
    if b.is_zero() {
        0
    } else {
        b.floor().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}
