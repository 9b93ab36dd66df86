//! Search for a partition `A_1 ∪ … ∪ A_{h+1}` in which the first `h` parts are nearly
//! independent sets of size about `sn/r` and `A_{h+1}` has no sparse `sn/r`-subset.

use crate::error::{param, Error, Result};
use crate::graph::{bits_of, Graph};
use crate::params::{RParams, Variant};
use crate::rng::Seed;
use rand::seq::SliceRandom;
use serde::Serialize;

/// Minimum-edge `k`-subsets are found exactly up to this ground-set size.
pub const EXACT_SPARSE_LIMIT: usize = 18;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionConstants {
    pub beta: f64,
    /// `gammas[h-1] = γ_h` for `h ∈ [m]`.
    pub gammas: Vec<f64>,
}

impl PartitionConstants {
    /// `β = 1/(10m(m+1)²)` and `γ_h = (β²/2)·4^{h−m}`.
    pub fn defaults(p: &RParams) -> Self {
        let m = p.m as f64;
        let beta = 1.0 / (10.0 * m * (m + 1.0) * (m + 1.0));
        let gammas = (1..=p.m).map(|h| beta * beta / 2.0 * 4f64.powi(h as i32 - p.m as i32)).collect();
        PartitionConstants { beta, gammas }
    }

    fn gamma(&self, h: usize) -> f64 {
        if h == 0 {
            0.0
        } else {
            self.gammas[h - 1]
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HPartition {
    #[serde(skip)]
    pub host: Graph,
    pub params: RParams,
    pub h: usize,
    /// `parts[i]` is `A_{i+1}`; the last one is `A_{h+1}`.
    pub parts: Vec<Vec<usize>>,
    pub constants: PartitionConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &'static str, holds: bool, detail: String) -> PropertyCheck {
    PropertyCheck { name, holds, detail, method: None }
}

/// `⌊sn/r⌋`.
pub fn sparse_size(p: &RParams, n: usize) -> usize {
    p.s * n / p.r
}

impl HPartition {
    pub fn trivial(host: &Graph, params: &RParams, constants: PartitionConstants) -> Result<Self> {
        params.require(Variant::B)?;
        if constants.gammas.len() != params.m {
            return param(format!("expected {} gammas, got {}", params.m, constants.gammas.len()));
        }
        Ok(HPartition { host: host.clone(), params: *params, h: 0, parts: vec![(0..host.n()).collect()], constants })
    }

    pub fn new(host: &Graph, params: &RParams, constants: PartitionConstants, parts: Vec<Vec<usize>>) -> Result<Self> {
        let mut p = Self::trivial(host, params, constants)?;
        let mut seen = vec![false; host.n()];
        for v in parts.iter().flatten() {
            if *v >= host.n() || std::mem::replace(&mut seen[*v], true) {
                return param(format!("vertex {v} repeated or out of range"));
            }
        }
        if seen.iter().any(|s| !s) || parts.is_empty() || parts.len() > params.m + 1 {
            return param("parts must partition the vertex set into at most m+1 classes");
        }
        p.h = parts.len() - 1;
        p.parts = parts.into_iter().map(|mut v| {
            v.sort_unstable();
            v
        }).collect();
        Ok(p)
    }

    fn last(&self) -> &[usize] {
        &self.parts[self.h]
    }

    fn non_neighbours_in(&self, x: usize, set: &[usize]) -> usize {
        set.iter().filter(|&&v| v != x && !self.host.has_edge(x, v)).count()
    }

    fn neighbours_in(&self, x: usize, set: &[usize]) -> usize {
        set.iter().filter(|&&v| self.host.has_edge(x, v)).count()
    }

    /// Properties (i)–(vi), recomputed from scratch.
    pub fn check_properties(&self, seed: &Seed) -> PropertyReport {
        let n = self.host.n() as f64;
        let (h, beta) = (self.h, self.constants.beta);
        let gh = self.constants.gamma(h);
        let share = self.params.s as f64 * n / self.params.r as f64;
        let mut checks = Vec::new();
        let bad: Vec<usize> = (0..h).filter(|&i| (self.parts[i].len() as f64 - share).abs() > gh * n).collect();
        checks.push(check("i", bad.is_empty(), format!("parts off (s/r ± γ_h)n: {bad:?}")));
        let outside: Vec<usize> = self.parts[..h].iter().flatten().copied().collect();
        let worst = outside.iter().map(|&x| self.non_neighbours_in(x, self.last())).max().unwrap_or(0);
        checks.push(check("ii", worst as f64 <= 4.0 * beta * n, format!("max non-neighbours in A_(h+1): {worst}")));
        let low = self.last().iter().flat_map(|&x| (0..h).map(move |i| (x, i))).map(|(x, i)| self.neighbours_in(x, &self.parts[i])).min();
        checks.push(check("iii", low.is_none_or(|l| l as f64 >= beta * n), format!("min neighbours from A_(h+1) into A_i: {low:?}")));
        if h < self.params.m {
            let k = sparse_size(&self.params, self.host.n());
            let thr = self.constants.gamma(h + 1).powi(2) * n * n;
            let (set, e, method) = min_edge_subset(&self.host, self.last(), k, seed);
            let holds = set.is_none() || e as f64 > thr;
            checks.push(PropertyCheck { name: "iv", holds, detail: format!("sparsest {k}-subset found has {e} edges, bound {thr:.4}"), method: Some(method) });
        } else {
            checks.push(check("iv", true, "h = m".into()));
        }
        let mut v_bad = None;
        'v: for i in 0..h {
            for j in (0..h).filter(|&j| j != i) {
                for &x in &self.parts[i] {
                    if 3 * self.neighbours_in(x, &self.parts[j]) < self.parts[j].len() {
                        v_bad = Some((x, j));
                        break 'v;
                    }
                }
            }
        }
        checks.push(check("v", v_bad.is_none(), format!("first violation (vertex, part): {v_bad:?}")));
        let mut vi_bad = None;
        for i in 0..=h {
            for j in i + 1..=h {
                let (a, b) = (&self.parts[i], &self.parts[j]);
                let missing = a.len() * b.len() - self.host.edge_count_between(a, b).unwrap_or(0);
                if missing as f64 > gh * (a.len() * b.len()) as f64 {
                    vi_bad.get_or_insert((i, j, missing));
                }
            }
        }
        checks.push(check("vi", vi_bad.is_none(), format!("first violation (i, j, missing): {vi_bad:?}")));
        PropertyReport { checks }
    }

    /// The starred properties the search maintains.
    pub fn check_star(&self) -> PropertyReport {
        let n = self.host.n() as f64;
        let (h, beta) = (self.h, self.constants.beta);
        let share = self.params.s as f64 * n / self.params.r as f64;
        let mut checks = Vec::new();
        let bad: Vec<usize> = (0..h)
            .filter(|&i| {
                let g = self.constants.gamma(i + 1);
                let a = &self.parts[i];
                (a.len() as f64 - share).abs() > beta * g * n || self.host.edges_within(a) as f64 > beta * beta * g * n * n
            })
            .collect();
        checks.push(check("i*", bad.is_empty(), format!("parts off size or edge bound: {bad:?}")));
        let outside: Vec<usize> = self.parts[..h].iter().flatten().copied().collect();
        let worst = outside.iter().map(|&x| self.non_neighbours_in(x, self.last())).max().unwrap_or(0);
        checks.push(check("ii*", worst as f64 <= 4.0 * beta * n, format!("max non-neighbours in A_(h+1): {worst}")));
        let low = self.last().iter().flat_map(|&x| (0..h).map(move |i| (x, i))).map(|(x, i)| self.neighbours_in(x, &self.parts[i])).min();
        checks.push(check("iii*", low.is_none_or(|l| l as f64 >= 2.0 * beta * n), format!("min neighbours into A_i: {low:?}")));
        PropertyReport { checks }
    }
}

/// A `k`-subset of `set` with few induced edges: exact branch and bound when
/// `|set| ≤ EXACT_SPARSE_LIMIT`, else max-degree peeling, swap descent and random restarts.
pub fn min_edge_subset(g: &Graph, set: &[usize], k: usize, seed: &Seed) -> (Option<Vec<usize>>, usize, Method) {
    if k > set.len() {
        return (None, 0, Method::Exhaustive);
    }
    if set.len() <= EXACT_SPARSE_LIMIT {
        let mut best = (usize::MAX, Vec::new());
        let mut cur = Vec::new();
        sparse_bb(g, set, k, 0, 0, &mut cur, &mut best);
        return (Some(best.1), best.0, Method::Exhaustive);
    }
    let mut best = peel(g, set, k);
    let mut best_e = descend(g, set, &mut best);
    let mut rng = seed.rng();
    for _ in 0..8 {
        let mut pool = set.to_vec();
        pool.shuffle(&mut rng);
        let mut cand = pool[..k].to_vec();
        let e = descend(g, set, &mut cand);
        if e < best_e {
            best_e = e;
            best = cand;
        }
    }
    best.sort_unstable();
    (Some(best), best_e, Method::Heuristic)
}

fn sparse_bb(g: &Graph, set: &[usize], k: usize, from: usize, edges: usize, cur: &mut Vec<usize>, best: &mut (usize, Vec<usize>)) {
    if edges >= best.0 {
        return;
    }
    if cur.len() == k {
        *best = (edges, cur.clone());
        return;
    }
    for i in from..set.len() {
        if set.len() - i < k - cur.len() {
            break;
        }
        let add = cur.iter().filter(|&&u| g.has_edge(u, set[i])).count();
        cur.push(set[i]);
        sparse_bb(g, set, k, i + 1, edges + add, cur, best);
        cur.pop();
        if best.0 == 0 {
            return;
        }
    }
}

fn peel(g: &Graph, set: &[usize], k: usize) -> Vec<usize> {
    let mut cur = set.to_vec();
    while cur.len() > k {
        let b = bits_of(g.n(), &cur);
        let (idx, _) = cur.iter().enumerate().max_by_key(|&(i, &v)| (g.adj(v).intersection_count(&b), std::cmp::Reverse(i))).expect("nonempty");
        cur.remove(idx);
    }
    cur
}

/// Single swaps that lower the induced edge count, to a local optimum.
fn descend(g: &Graph, set: &[usize], cur: &mut [usize]) -> usize {
    loop {
        let b = bits_of(g.n(), cur);
        let inner = |v: usize| g.adj(v).intersection_count(&b);
        let mut moved = false;
        'swap: for i in 0..cur.len() {
            let out = cur[i];
            let d_out = inner(out);
            for &w in set.iter().filter(|&&w| !b.contains(w)) {
                let d_in = inner(w) - usize::from(g.has_edge(w, out));
                if d_in < d_out {
                    cur[i] = w;
                    moved = true;
                    break 'swap;
                }
            }
        }
        if !moved {
            return g.edges_within(cur);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub r_set: Vec<usize>,
    pub s_set: Vec<usize>,
    pub star: PropertyReport,
}

/// Splits `A_{h+1}` along a sparse `X`: vertices of `X` missing `≥ 3βn` of `Y = A_{h+1} ∖ X`
/// move out, vertices of `Y` with `≤ 3βn` neighbours in `X` move in.
pub fn refine_split(p: &HPartition, x: &[usize]) -> Result<(HPartition, SplitReport)> {
    let g = &p.host;
    let n = g.n() as f64;
    let h = p.h;
    if h >= p.params.m {
        return Err(Error::Infeasible("h = m already".into()));
    }
    let k = sparse_size(&p.params, g.n());
    if x.len() != k {
        return Err(Error::Infeasible(format!("|X| = {} but sn/r = {k}", x.len())));
    }
    let last = bits_of(g.n(), p.last());
    if x.iter().any(|&v| !last.contains(v)) {
        return Err(Error::Infeasible("X is not inside A_(h+1)".into()));
    }
    let gamma = p.constants.gamma(h + 1);
    let e = g.edges_within(x);
    if e as f64 > gamma * gamma * n * n {
        return Err(Error::Infeasible(format!("e(X) = {e} exceeds γ²n² = {:.4}", gamma * gamma * n * n)));
    }
    let xb = bits_of(g.n(), x);
    let y: Vec<usize> = p.last().iter().copied().filter(|&v| !xb.contains(v)).collect();
    let thr = 3.0 * p.constants.beta * n;
    let r_set: Vec<usize> = x.iter().copied().filter(|&v| p.non_neighbours_in(v, &y) as f64 >= thr).collect();
    let s_set: Vec<usize> = y.iter().copied().filter(|&v| p.neighbours_in(v, x) as f64 <= thr).collect();
    let mut new_part: Vec<usize> = x.iter().copied().filter(|v| !r_set.contains(v)).chain(s_set.iter().copied()).collect();
    let mut rest: Vec<usize> = y.iter().copied().filter(|v| !s_set.contains(v)).chain(r_set.iter().copied()).collect();
    new_part.sort_unstable();
    rest.sort_unstable();
    let mut parts = p.parts[..h].to_vec();
    parts.push(new_part);
    parts.push(rest);
    let out = HPartition { host: p.host.clone(), params: p.params, h: h + 1, parts, constants: p.constants.clone() };
    let star = out.check_star();
    Ok((out, SplitReport { r_set, s_set, star }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanupTrace {
    /// `(vertex, from part, to part)`.
    pub shifts: Vec<(usize, usize, usize)>,
    /// `Σ e(A_i)` over the first `h` parts, before the first and after every shift.
    pub potential: Vec<usize>,
    pub step_limit_hit: bool,
}

/// Moves single vertices between the first `h` parts while a vertex has fewer than a third of
/// a part as neighbours and the move lowers `Σ e(A_i)`.
pub fn cleanup_v_vi(p: &HPartition) -> Result<(HPartition, CleanupTrace)> {
    let g = &p.host;
    let h = p.h;
    let start = p.parts.clone();
    let mut parts = p.parts.clone();
    let potential = |parts: &[Vec<usize>]| parts[..h].iter().map(|a| g.edges_within(a)).sum::<usize>();
    let mut trace = CleanupTrace { shifts: vec![], potential: vec![potential(&parts)], step_limit_hit: false };
    let limit = g.n() * g.n();
    loop {
        if trace.shifts.len() >= limit {
            trace.step_limit_hit = true;
            break;
        }
        let mut found = None;
        'scan: for i in 0..h {
            for j in (0..h).filter(|&j| j != i) {
                for &x in &parts[i] {
                    let into_j = parts[j].iter().filter(|&&v| g.has_edge(x, v)).count();
                    let into_i = parts[i].iter().filter(|&&v| g.has_edge(x, v)).count();
                    if 3 * into_j < parts[j].len() && into_j < into_i {
                        found = Some((x, i, j));
                        break 'scan;
                    }
                }
            }
        }
        let Some((x, i, j)) = found else { break };
        parts[i].retain(|&v| v != x);
        parts[j].push(x);
        parts[j].sort_unstable();
        trace.shifts.push((x, i, j));
        let pot = potential(&parts);
        if pot >= *trace.potential.last().expect("nonempty") {
            return Err(Error::Validation("cleanup shift did not lower the potential".into()));
        }
        trace.potential.push(pot);
        let moved: usize = (0..h).map(|a| sym_diff(&start[a], &parts[a])).sum();
        if moved > 2 * trace.shifts.len() {
            return Err(Error::Validation("symmetric difference exceeds 2t".into()));
        }
    }
    Ok((HPartition { parts, ..p.clone() }, trace))
}

fn sym_diff(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|v| !b.contains(v)).count() + b.iter().filter(|v| !a.contains(v)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PartitionEvent {
    Refined { h: usize, x: Vec<usize>, method: Method, r_set: Vec<usize>, s_set: Vec<usize> },
    RefineRejected { h: usize, reason: String },
    NoSparseSet { h: usize, best_edges: usize, method: Method },
    Cleanup { shifts: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionOutcome {
    pub partition: HPartition,
    pub events: Vec<PartitionEvent>,
    pub min_degree_ok: bool,
    pub report: PropertyReport,
}

pub fn find_partition(host: &Graph, params: &RParams, constants: PartitionConstants, seed: &Seed) -> Result<PartitionOutcome> {
    let mut p = HPartition::trivial(host, params, constants)?;
    let n = host.n();
    let min_degree_ok = host.min_degree() * params.r >= (params.r - params.s) * n;
    let mut events = Vec::new();
    while p.h < params.m {
        let k = sparse_size(params, n);
        let gamma = p.constants.gamma(p.h + 1);
        let (set, e, method) = min_edge_subset(host, p.last(), k, &seed.child(p.h as u64));
        let Some(x) = set.filter(|_| e as f64 <= gamma * gamma * (n * n) as f64) else {
            events.push(PartitionEvent::NoSparseSet { h: p.h, best_edges: e, method });
            break;
        };
        let (q, rep) = refine_split(&p, &x)?;
        if !rep.star.all_hold() {
            let failing: Vec<&str> = rep.star.checks.iter().filter(|c| !c.holds).map(|c| c.name).collect();
            events.push(PartitionEvent::RefineRejected { h: p.h, reason: format!("fails {failing:?}") });
            break;
        }
        events.push(PartitionEvent::Refined { h: p.h, x, method, r_set: rep.r_set, s_set: rep.s_set });
        p = q;
    }
    let (p, trace) = cleanup_v_vi(&p)?;
    events.push(PartitionEvent::Cleanup { shifts: trace.shifts.len() });
    let report = p.check_properties(&seed.child(1000));
    Ok(PartitionOutcome { partition: p, events, min_degree_ok, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    /// `(leftover vertex, tuple index)`.
    pub assign: Vec<(usize, usize)>,
    pub loads: Vec<usize>,
    pub method: &'static str,
}

/// Index `i` is good for `x` when at most one part `S_{i,j}` receives fewer than `d|S_{i,j}|`
/// edges from `x`.
pub fn good_indices(g: &Graph, tuples: &[Vec<Vec<usize>>], x: usize, d: f64) -> Vec<usize> {
    (0..tuples.len())
        .filter(|&i| {
            tuples[i].iter().filter(|s| (s.iter().filter(|&&v| g.has_edge(x, v)).count() as f64) < d * s.len() as f64).count() <= 1
        })
        .collect()
}

/// Assigns each leftover vertex to a good index with at most `cap` vertices per index:
/// least-loaded first, then augmenting paths if that gets stuck.
pub fn distribute_leftover(g: &Graph, tuples: &[Vec<Vec<usize>>], leftover: &[usize], d: f64, cap: usize) -> Result<Assignment> {
    let good: Vec<Vec<usize>> = leftover.iter().map(|&x| good_indices(g, tuples, x, d)).collect();
    if let Some(i) = good.iter().position(Vec::is_empty) {
        return Err(Error::Infeasible(format!("vertex {} has no good index", leftover[i])));
    }
    let mut loads = vec![0usize; tuples.len()];
    let mut to = vec![usize::MAX; leftover.len()];
    let mut stuck = false;
    for (xi, opts) in good.iter().enumerate() {
        match opts.iter().copied().filter(|&i| loads[i] < cap).min_by_key(|&i| (loads[i], i)) {
            Some(i) => {
                loads[i] += 1;
                to[xi] = i;
            }
            None => stuck = true,
        }
    }
    let mut method = "round-robin";
    if stuck {
        method = "max-flow";
        for xi in 0..leftover.len() {
            if to[xi] == usize::MAX && !augment(xi, &good, cap, &mut to, &mut loads, &mut vec![false; tuples.len()]) {
                return Err(Error::Infeasible(format!("no assignment within cap {cap} for vertex {}", leftover[xi])));
            }
        }
    }
    Ok(Assignment { assign: leftover.iter().copied().zip(to).collect(), loads, method })
}

fn augment(xi: usize, good: &[Vec<usize>], cap: usize, to: &mut [usize], loads: &mut [usize], seen: &mut [bool]) -> bool {
    for &i in &good[xi] {
        if std::mem::replace(&mut seen[i], true) {
            continue;
        }
        if loads[i] < cap {
            loads[i] += 1;
            to[xi] = i;
            return true;
        }
        let holders: Vec<usize> = (0..to.len()).filter(|&y| to[y] == i).collect();
        for y in holders {
            if augment(y, good, cap, to, loads, seen) {
                to[xi] = i;
                return true;
            }
        }
    }
    false
}
