//! Exact search for clique factors and for the small clique configurations used
//! by the probabilistic lemmas.
//!
//! The factor search is exact-cover backtracking: pick the uncovered vertex with the
//! fewest candidate pieces (lowest label on ties), branch over its candidates in
//! lexicographic order. Pruning:
//! * candidates with two vertices of `Z` are never generated;
//! * vertices with identical neighbourhoods (open or closed) and equal `Z`-membership
//!   are interchangeable, so a candidate may only use the lowest uncovered members of
//!   each such class;
//! * an uncovered component whose size is not a multiple of the piece size is dead;
//! * uncovered sets already refuted are remembered (bounded table).

use crate::error::{param, Error, Result};
use crate::graph::{bits_of, canonical, full_bits, Bits, Graph};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};

/// The graph to tile with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Clique(usize),
    Graph(Graph),
}

impl Piece {
    pub fn size(&self) -> usize {
        match self {
            Piece::Clique(k) => *k,
            Piece::Graph(h) => h.n(),
        }
    }
}

/// Largest explicit piece accepted.
pub const PIECE_GRAPH_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Decide,
    Find,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct FactorInstance {
    pub host: Graph,
    pub piece: Piece,
    pub z: Vec<usize>,
    pub mode: Mode,
}

impl FactorInstance {
    pub fn cliques(host: Graph, r: usize) -> Self {
        FactorInstance { host, piece: Piece::Clique(r), z: Vec::new(), mode: Mode::Find }
    }

    pub fn with_z(mut self, z: Vec<usize>) -> Self {
        self.z = z;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Found,
    None,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorResult {
    pub status: Status,
    pub cliques: Vec<Vec<usize>>,
    pub covered: usize,
    /// Search nodes expanded.
    pub nodes: u64,
    /// For maximisation: the search finished, so `covered` is optimal.
    pub optimal: bool,
}

pub const DEFAULT_BUDGET: u64 = 2_000_000;
const MEMO_CAP: usize = 1 << 18;

struct Engine<'a> {
    g: &'a Graph,
    k: usize,
    piece: Option<&'a Graph>,
    piece_connected: bool,
    z: Bits,
    class_of: Vec<usize>,
    class_bits: Vec<Bits>,
    budget: u64,
    nodes: u64,
    memo: HashSet<Vec<usize>>,
    chosen: Vec<Vec<usize>>,
    best: Vec<Vec<usize>>,
    out_of_budget: bool,
}

enum Outcome {
    Found,
    Dead,
    Timeout,
}

/// Classes of vertices with equal closed or equal open neighbourhoods and equal `Z`-membership.
fn twin_classes(g: &Graph, z: &Bits) -> Vec<usize> {
    let n = g.n();
    let mut class_of = vec![usize::MAX; n];
    let mut next = 0;
    let mut closed: HashMap<(Vec<usize>, bool), usize> = HashMap::new();
    let mut open: HashMap<(Vec<usize>, bool), Vec<usize>> = HashMap::new();
    let mut closed_members: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in 0..n {
        let mut c = g.adj(v).clone();
        c.insert(v);
        let key = (c.ones().collect::<Vec<_>>(), z.contains(v));
        let id = *closed.entry(key).or_insert_with(|| {
            next += 1;
            next - 1
        });
        closed_members.entry(id).or_default().push(v);
    }
    let mut id = 0;
    let mut ids: Vec<_> = closed_members.into_iter().collect();
    ids.sort_by_key(|(_, m)| m[0]);
    for (_, members) in ids {
        if members.len() > 1 {
            for &v in &members {
                class_of[v] = id;
            }
            id += 1;
        } else {
            let v = members[0];
            open.entry((g.neighbors(v), z.contains(v))).or_default().push(v);
        }
    }
    let mut rest: Vec<_> = open.into_values().collect();
    rest.sort_by_key(|m| m[0]);
    for members in rest {
        for &v in &members {
            class_of[v] = id;
        }
        id += 1;
    }
    class_of
}

impl<'a> Engine<'a> {
    fn new(g: &'a Graph, piece: &'a Piece, z: &[usize], budget: u64) -> Self {
        let zb = bits_of(g.n(), z);
        let class_of = twin_classes(g, &zb);
        let classes = class_of.iter().copied().max().map_or(0, |c| c + 1);
        let mut class_bits = vec![Bits::with_capacity(g.n()); classes];
        for (v, &c) in class_of.iter().enumerate() {
            class_bits[c].insert(v);
        }
        let (pg, connected) = match piece {
            Piece::Clique(_) => (None, true),
            Piece::Graph(h) => (Some(h), is_connected(h)),
        };
        Engine {
            g,
            k: piece.size(),
            piece: pg,
            piece_connected: connected,
            z: zb,
            class_of,
            class_bits,
            budget,
            nodes: 0,
            memo: HashSet::new(),
            chosen: Vec::new(),
            best: Vec::new(),
            out_of_budget: false,
        }
    }

    /// Twin rule: `u` may join `cur` only if every lower uncovered twin of `u` (other than the
    /// pivot) is already in `cur`.
    fn twin_ok(&self, u: usize, pivot: usize, unc: &Bits, cur_bits: &Bits) -> bool {
        let cb = &self.class_bits[self.class_of[u]];
        if cb.count_ones(..) == 1 {
            return true;
        }
        cb.ones().take_while(|&w| w < u).all(|w| w == pivot || !unc.contains(w) || cur_bits.contains(w))
    }

    /// Calls `f` on each candidate through `v`; stops early when `f` returns false.
    fn for_each_candidate(&self, v: usize, unc: &Bits, f: &mut dyn FnMut(&[usize]) -> bool) {
        match self.piece {
            None => {
                let mut cand = self.g.adj(v).clone();
                cand.intersect_with(unc);
                if self.z.contains(v) {
                    cand.difference_with(&self.z);
                }
                let mut cur = vec![v];
                let mut cur_bits = Bits::with_capacity(self.g.n());
                cur_bits.insert(v);
                self.clique_rec(v, unc, cand, &mut cur, &mut cur_bits, f);
            }
            Some(h) => {
                for set in self.piece_sets(h, v, unc) {
                    let sb = bits_of(self.g.n(), &set);
                    if sb.intersection_count(&self.z) > 1 {
                        continue;
                    }
                    if !set.iter().all(|&u| u == v || self.twin_ok(u, v, unc, &sb)) {
                        continue;
                    }
                    if !f(&set) {
                        return;
                    }
                }
            }
        }
    }

    fn clique_rec(&self, pivot: usize, unc: &Bits, cand: Bits, cur: &mut Vec<usize>, cur_bits: &mut Bits, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == self.k {
            let mut sorted = cur.clone();
            sorted.sort_unstable();
            return f(&sorted);
        }
        if cand.count_ones(..) < self.k - cur.len() {
            return true;
        }
        let last = if cur.len() > 1 { cur[cur.len() - 1] + 1 } else { 0 };
        for u in cand.ones().filter(|&u| u >= last) {
            if !self.twin_ok(u, pivot, unc, cur_bits) {
                continue;
            }
            let mut next = cand.clone();
            next.intersect_with(self.g.adj(u));
            if self.z.contains(u) {
                next.difference_with(&self.z);
            }
            cur.push(u);
            cur_bits.insert(u);
            let go = self.clique_rec(pivot, unc, next, cur, cur_bits, f);
            cur.pop();
            cur_bits.remove(u);
            if !go {
                return false;
            }
        }
        true
    }

    /// Vertex sets `S ∋ v`, `S ⊆ unc`, such that `G[S]` contains a copy of `h`.
    fn piece_sets(&self, h: &Graph, v: usize, unc: &Bits) -> Vec<Vec<usize>> {
        let mut found = BTreeSet::new();
        for a in 0..h.n() {
            if h.degree(a) > self.g.adj(v).intersection_count(unc) {
                continue;
            }
            let order = bfs_order(h, a);
            let mut image = vec![usize::MAX; h.n()];
            image[a] = v;
            let mut used = Bits::with_capacity(self.g.n());
            used.insert(v);
            self.embed_rec(h, &order, 1, &mut image, &mut used, unc, &mut found);
        }
        found.into_iter().collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn embed_rec(&self, h: &Graph, order: &[usize], i: usize, image: &mut [usize], used: &mut Bits, unc: &Bits, found: &mut BTreeSet<Vec<usize>>) {
        if i == order.len() {
            let mut s: Vec<usize> = image.to_vec();
            s.sort_unstable();
            found.insert(s);
            return;
        }
        let b = order[i];
        let mut cand = unc.clone();
        cand.difference_with(used);
        for a in h.adj(b).ones() {
            if image[a] != usize::MAX {
                cand.intersect_with(self.g.adj(image[a]));
            }
        }
        for u in cand.ones() {
            image[b] = u;
            used.insert(u);
            self.embed_rec(h, order, i + 1, image, used, unc, found);
            used.remove(u);
            image[b] = usize::MAX;
        }
    }

    fn count_capped(&self, v: usize, unc: &Bits, cap: usize) -> usize {
        let mut c = 0;
        self.for_each_candidate(v, unc, &mut |_| {
            c += 1;
            c < cap
        });
        c
    }

    fn pick(&self, unc: &Bits) -> (usize, usize) {
        let mut best = (usize::MAX, usize::MAX);
        for v in unc.ones() {
            let c = self.count_capped(v, unc, best.1);
            if c < best.1 {
                best = (v, c);
                if c <= 1 {
                    break;
                }
            }
        }
        best
    }

    fn components_ok(&self, unc: &Bits) -> bool {
        if !self.piece_connected {
            return true;
        }
        let mut seen = Bits::with_capacity(self.g.n());
        for s in unc.ones() {
            if seen.contains(s) {
                continue;
            }
            let mut stack = vec![s];
            seen.insert(s);
            let mut size = 0;
            while let Some(x) = stack.pop() {
                size += 1;
                for y in self.g.adj(x).intersection(unc) {
                    if !seen.contains(y) {
                        seen.insert(y);
                        stack.push(y);
                    }
                }
            }
            if size % self.k != 0 {
                return false;
            }
        }
        true
    }

    fn exact(&mut self, unc: &Bits) -> Outcome {
        if unc.is_clear() {
            return Outcome::Found;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.out_of_budget = true;
            return Outcome::Timeout;
        }
        let key = unc.as_slice().to_vec();
        if self.memo.contains(&key) {
            return Outcome::Dead;
        }
        let dead = |e: &mut Self, key: Vec<usize>| {
            if e.memo.len() < MEMO_CAP {
                e.memo.insert(key);
            }
            Outcome::Dead
        };
        if !self.components_ok(unc) {
            return dead(self, key);
        }
        let (v, count) = self.pick(unc);
        if count == 0 {
            return dead(self, key);
        }
        let mut cands = Vec::new();
        self.for_each_candidate(v, unc, &mut |c| {
            cands.push(c.to_vec());
            true
        });
        for c in cands {
            let mut next = unc.clone();
            for &u in &c {
                next.remove(u);
            }
            self.chosen.push(c);
            if self.chosen.len() > self.best.len() {
                self.best = self.chosen.clone();
            }
            match self.exact(&next) {
                Outcome::Found => return Outcome::Found,
                Outcome::Timeout => return Outcome::Timeout,
                Outcome::Dead => {}
            }
            self.chosen.pop();
        }
        dead(self, key)
    }

    fn component_bound(&self, unc: &Bits) -> usize {
        if !self.piece_connected {
            return unc.count_ones(..) / self.k * self.k;
        }
        let mut seen = Bits::with_capacity(self.g.n());
        let mut total = 0;
        for s in unc.ones() {
            if seen.contains(s) {
                continue;
            }
            let mut stack = vec![s];
            seen.insert(s);
            let mut size = 0;
            while let Some(x) = stack.pop() {
                size += 1;
                for y in self.g.adj(x).intersection(unc) {
                    if !seen.contains(y) {
                        seen.insert(y);
                        stack.push(y);
                    }
                }
            }
            total += size / self.k * self.k;
        }
        total
    }

    fn maximize(&mut self, unc: &Bits) {
        if self.out_of_budget {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.out_of_budget = true;
            return;
        }
        let covered = self.chosen.len() * self.k;
        if covered > self.best.len() * self.k {
            self.best = self.chosen.clone();
        }
        if covered + self.component_bound(unc) <= self.best.len() * self.k {
            return;
        }
        if unc.count_ones(..) < self.k {
            return;
        }
        let (v, count) = self.pick(unc);
        let mut without = unc.clone();
        without.remove(v);
        if count > 0 {
            let mut cands = Vec::new();
            self.for_each_candidate(v, unc, &mut |c| {
                cands.push(c.to_vec());
                true
            });
            for c in cands {
                let mut next = unc.clone();
                for &u in &c {
                    next.remove(u);
                }
                self.chosen.push(c);
                self.maximize(&next);
                self.chosen.pop();
            }
        }
        self.maximize(&without);
    }
}

fn is_connected(h: &Graph) -> bool {
    h.n() == 0 || bfs_order(h, 0).len() == h.n()
}

/// BFS from `a`, then the remaining vertices of other components in label order.
fn bfs_order(h: &Graph, a: usize) -> Vec<usize> {
    let mut seen = vec![false; h.n()];
    let mut order = Vec::with_capacity(h.n());
    for root in std::iter::once(a).chain(0..h.n()) {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut q = std::collections::VecDeque::from([root]);
        while let Some(x) = q.pop_front() {
            order.push(x);
            for y in h.adj(x).ones() {
                if !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
        if root == a && order.len() == h.n() {
            break;
        }
    }
    order
}

fn check_instance(inst: &FactorInstance) -> Result<Vec<usize>> {
    let z = canonical(inst.host.n(), &inst.z)?;
    match &inst.piece {
        Piece::Clique(0) => param("piece size must be at least 1"),
        Piece::Graph(h) if h.n() == 0 => param("piece graph is empty"),
        Piece::Graph(h) if h.n() > PIECE_GRAPH_LIMIT => {
            Err(Error::Size { what: "piece vertices".into(), got: h.n(), limit: PIECE_GRAPH_LIMIT })
        }
        _ => Ok(z),
    }
}

/// Decides or finds a factor (or, in `Maximize` mode, delegates to [`max_partial_factor`]).
pub fn solve_factor(inst: &FactorInstance, budget: u64) -> Result<FactorResult> {
    let z = check_instance(inst)?;
    let n = inst.host.n();
    let k = inst.piece.size();
    if inst.mode == Mode::Maximize {
        return max_partial_with(inst, &z, budget);
    }
    if n % k != 0 {
        return param(format!("n={n} is not divisible by the piece size {k}"));
    }
    let done = |status, cliques: Vec<Vec<usize>>, nodes| {
        let covered = cliques.len() * k;
        FactorResult { status, cliques, covered, nodes, optimal: false }
    };
    if z.len() > n / k {
        return Ok(done(Status::None, Vec::new(), 0));
    }
    let mut e = Engine::new(&inst.host, &inst.piece, &z, budget);
    let out = e.exact(&full_bits(n));
    let nodes = e.nodes;
    Ok(match out {
        Outcome::Found => done(Status::Found, sorted(e.chosen), nodes),
        Outcome::Dead => done(Status::None, Vec::new(), nodes),
        Outcome::Timeout => done(Status::Timeout, sorted(e.best), nodes),
    })
}

fn sorted(mut v: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    v.sort();
    v
}

/// Maximum number of vertices coverable by disjoint `K_r` copies.
pub fn max_partial_factor(host: &Graph, r: usize, budget: u64) -> Result<FactorResult> {
    if r < 2 {
        return param("piece size must be at least 2");
    }
    let inst = FactorInstance { host: host.clone(), piece: Piece::Clique(r), z: Vec::new(), mode: Mode::Maximize };
    max_partial_with(&inst, &[], budget)
}

fn max_partial_with(inst: &FactorInstance, z: &[usize], budget: u64) -> Result<FactorResult> {
    let n = inst.host.n();
    let mut e = Engine::new(&inst.host, &inst.piece, z, budget);
    // greedy lower bound: lexicographic first-fit
    let mut unc = full_bits(n);
    while let Some(v) = unc.ones().find(|&v| e.count_capped(v, &unc, 1) > 0) {
        let mut first = None;
        e.for_each_candidate(v, &unc, &mut |c| {
            first = Some(c.to_vec());
            false
        });
        let c = first.expect("counted");
        for &u in &c {
            unc.remove(u);
        }
        e.best.push(c);
        let cleared: Vec<usize> = unc.ones().take_while(|&u| u < v).collect();
        for u in cleared {
            unc.remove(u);
        }
        unc.remove(v);
    }
    e.maximize(&full_bits(n));
    let k = inst.piece.size();
    let optimal = !e.out_of_budget;
    let cliques = sorted(e.best);
    let covered = cliques.len() * k;
    let status = if optimal {
        if covered == n { Status::Found } else { Status::None }
    } else {
        Status::Timeout
    };
    Ok(FactorResult { status, cliques, covered, nodes: e.nodes, optimal })
}

/// Disjointness, piece containment and the `Z` bound for a list of vertex sets.
pub fn validate_pieces(host: &Graph, piece: &Piece, z: &[usize], sets: &[Vec<usize>]) -> Result<()> {
    let zb = bits_of(host.n(), z);
    let mut used = Bits::with_capacity(host.n());
    for s in sets {
        if s.len() != piece.size() || s.iter().any(|&v| v >= host.n()) {
            return Err(Error::Validation(format!("{s:?} has the wrong size or labels")));
        }
        for &v in s {
            if used.put(v) {
                return Err(Error::Validation(format!("vertex {v} used twice")));
            }
        }
        if bits_of(host.n(), s).intersection_count(&zb) > 1 {
            return Err(Error::Validation(format!("{s:?} has two vertices of Z")));
        }
        let ok = match piece {
            Piece::Clique(_) => host.is_clique(s),
            Piece::Graph(h) => {
                let (sub, _) = host.induced_subgraph(s)?;
                let inst = FactorInstance { host: sub, piece: Piece::Graph(h.clone()), z: Vec::new(), mode: Mode::Find };
                solve_factor(&inst, DEFAULT_BUDGET)?.status == Status::Found
            }
        };
        if !ok {
            return Err(Error::Validation(format!("{s:?} does not carry the piece")));
        }
    }
    Ok(())
}

/// Some `K_s` inside `S`, or `None` after exhaustive search.
pub fn find_clique_in_subset(g: &Graph, set: &[usize], s: usize) -> Result<Option<Vec<usize>>> {
    let set = canonical(g.n(), set)?;
    Ok(g.find_clique_in_bits(&bits_of(g.n(), &set), s))
}

/// First member of `family` spanning a clique.
pub fn find_clique_in_family(g: &Graph, family: &[Vec<usize>]) -> Option<Vec<usize>> {
    family.iter().find(|s| s.iter().all(|&v| v < g.n()) && g.is_clique(s)).cloned()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyFailure {
    /// The `Z` vertex that could not be extended; `None` when the `Z`-free phase ran dry.
    pub vertex: Option<usize>,
    pub found: Vec<Vec<usize>>,
}

/// Disjoint `K_{s+1}` copies, each meeting `Z` in at most one vertex.
///
/// When `|Z| ≥ h`, the first `h` vertices of `Z` are extended in order by a `K_s` in
/// their neighbourhood outside `Z`. Otherwise `h - |Z|` copies avoiding `Z` are found
/// first and then every vertex of `Z` is extended.
pub fn greedy_conforming_collection(
    g: &Graph,
    z: &[usize],
    s: usize,
    h: usize,
    forbidden: &[usize],
) -> Result<std::result::Result<Vec<Vec<usize>>, GreedyFailure>> {
    let z = canonical(g.n(), z)?;
    let forbidden = canonical(g.n(), forbidden)?;
    let zb = bits_of(g.n(), &z);
    let mut used = bits_of(g.n(), &forbidden);
    used.union_with(&zb);
    let mut found: Vec<Vec<usize>> = Vec::new();
    let take = |used: &mut Bits, c: &[usize]| {
        for &u in c {
            used.insert(u);
        }
    };
    if z.len() < h {
        for _ in 0..h - z.len() {
            let mut avail = full_bits(g.n());
            avail.difference_with(&used);
            match g.find_clique_in_bits(&avail, s + 1) {
                Some(c) => {
                    take(&mut used, &c);
                    found.push(c);
                }
                None => return Ok(Err(GreedyFailure { vertex: None, found })),
            }
        }
    }
    let quota = h.saturating_sub(found.len()).min(z.len());
    for &v in z.iter().take(quota) {
        if bits_of(g.n(), &forbidden).contains(v) {
            return Ok(Err(GreedyFailure { vertex: Some(v), found }));
        }
        let mut avail = g.adj(v).clone();
        avail.difference_with(&used);
        match g.find_clique_in_bits(&avail, s) {
            Some(mut c) => {
                take(&mut used, &c);
                c.push(v);
                c.sort_unstable();
                found.push(c);
            }
            None => return Ok(Err(GreedyFailure { vertex: Some(v), found })),
        }
    }
    Ok(Ok(found))
}

/// Exhaustive cap for [`find_fq`].
pub const FQ_LIMIT: usize = 40;

/// An embedding of `F_q` (`q` copies of `K_s`, the first two sharing one vertex, the rest
/// disjoint). Slot layout: block 1 is `0..s`, block 2 is `s-1..2s-1`, block `i ≥ 3` is
/// `(i-1)s-1..is-1`.
pub fn find_fq(g: &Graph, s: usize, q: usize, within: Option<&[usize]>) -> Result<Option<Vec<usize>>> {
    if q < 2 || s < 2 {
        return param(format!("need q ≥ 2 and s ≥ 2, got q={q}, s={s}"));
    }
    let w = match within {
        Some(w) => bits_of(g.n(), &canonical(g.n(), w)?),
        None => full_bits(g.n()),
    };
    let size = w.count_ones(..);
    if size > FQ_LIMIT {
        return Err(Error::Size { what: "vertices for F_q search".into(), got: size, limit: FQ_LIMIT });
    }
    if size < q * s - 1 {
        return Ok(None);
    }
    for c in w.ones() {
        let mut nb = g.adj(c).clone();
        nb.intersect_with(&w);
        let halves = g.enumerate_cliques(s - 1, Some(&nb.ones().collect::<Vec<_>>()), None)?;
        for (i, a) in halves.iter().enumerate() {
            for b in &halves[i + 1..] {
                if a.iter().any(|x| b.contains(x)) {
                    continue;
                }
                let mut used = w.clone();
                used.toggle_range(..);
                used.insert(c);
                for &x in a.iter().chain(b) {
                    used.insert(x);
                }
                let mut rest = Vec::new();
                if pack_rest(g, s, q - 2, &w, &mut used, 0, &mut rest) {
                    let mut emb: Vec<usize> = a.clone();
                    emb.push(c);
                    emb.extend(b);
                    for k in rest {
                        emb.extend(k);
                    }
                    return Ok(Some(emb));
                }
            }
        }
    }
    Ok(None)
}

/// `need` disjoint `K_s` in `w ∖ used`, chosen with increasing minimum vertex.
fn pack_rest(g: &Graph, s: usize, need: usize, w: &Bits, used: &mut Bits, from: usize, out: &mut Vec<Vec<usize>>) -> bool {
    if need == 0 {
        return true;
    }
    let mut avail = w.clone();
    avail.difference_with(used);
    if avail.count_ones(..) < need * s {
        return false;
    }
    for v in avail.ones().filter(|&v| v >= from) {
        let mut nb = g.adj(v).clone();
        nb.intersect_with(&avail);
        nb.remove_range(..v + 1);
        let Ok(tails) = g.enumerate_cliques(s - 1, Some(&nb.ones().collect::<Vec<_>>()), None) else { return false };
        for tail in tails {
            let mut k = vec![v];
            k.extend(tail);
            for &x in &k {
                used.insert(x);
            }
            out.push(k.clone());
            if pack_rest(g, s, need - 1, w, used, v + 1, out) {
                return true;
            }
            out.pop();
            for &x in &k {
                used.remove(x);
            }
        }
    }
    false
}

/// A `K_s` in `N(K) ∩ part ∖ avoid`, so that `K` plus it is a clique.
pub fn extend_clique_into_part(g: &Graph, k: &[usize], part: &[usize], s: usize, avoid: &[usize]) -> Result<Option<Vec<usize>>> {
    let k = canonical(g.n(), k)?;
    let part = canonical(g.n(), part)?;
    let avoid = canonical(g.n(), avoid)?;
    if !g.is_clique(&k) {
        return param(format!("{k:?} is not a clique"));
    }
    if k.iter().any(|v| part.binary_search(v).is_ok()) {
        return param("K meets the part");
    }
    let mut cand = g.common_bits(&k);
    cand.intersect_with(&bits_of(g.n(), &part));
    cand.difference_with(&bits_of(g.n(), &avoid));
    Ok(g.find_clique_in_bits(&cand, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete_multipartite, gen_gnp};
    use crate::ratio::Probability;
    use crate::rng::Seed;
    use proptest::prelude::*;

    fn cycle(n: usize) -> Graph {
        let e: Vec<_> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    fn solve(g: &Graph, r: usize, z: &[usize]) -> FactorResult {
        solve_factor(&FactorInstance::cliques(g.clone(), r).with_z(z.to_vec()), DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve(&cycle(6), 3, &[]).status, Status::None);
        let k6 = solve(&Graph::complete(6), 3, &[]);
        assert_eq!((k6.status, k6.cliques.len(), k6.covered), (Status::Found, 2, 6));
        assert_eq!(solve(&Graph::complete(6), 3, &[0, 1, 2, 3, 4, 5]).status, Status::None);
        let b = gen_complete_multipartite(&[4, 4, 2]).unwrap();
        assert!(solve_factor(&FactorInstance::cliques(b, 3), 10).is_err());
        let t = solve(&gen_complete_multipartite(&[3, 3, 3]).unwrap(), 3, &[]);
        assert_eq!(t.status, Status::Found);
        assert_eq!(t.cliques.len(), 3);
    }

    #[test]
    fn z_conforming_is_respected() {
        let g = Graph::complete(9);
        let r = solve(&g, 3, &[0, 1, 2]);
        assert_eq!(r.status, Status::Found);
        validate_pieces(&g, &Piece::Clique(3), &[0, 1, 2], &r.cliques).unwrap();
        assert_eq!(solve(&g, 3, &[0, 1, 2, 3]).status, Status::None);
    }

    #[test]
    fn timeout_reports_partial() {
        let g = gen_gnp(30, Probability::parse("0.5").unwrap(), &Seed::new(1));
        let r = solve_factor(&FactorInstance::cliques(g, 3), 1).unwrap();
        assert_eq!(r.status, Status::Timeout);
    }

    #[test]
    fn max_partial_examples() {
        let mut c6 = cycle(6);
        c6.add_edge(0, 2).unwrap();
        assert_eq!(max_partial_factor(&c6, 3, DEFAULT_BUDGET).unwrap().covered, 3);
        let k7 = max_partial_factor(&Graph::complete(7), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!((k7.covered, k7.optimal), (6, true));
        assert_eq!(max_partial_factor(&Graph::empty(9), 3, DEFAULT_BUDGET).unwrap().covered, 0);
        assert!(max_partial_factor(&Graph::empty(9), 1, 10).is_err());
    }

    #[test]
    fn piece_graph_factor() {
        // P_3 pieces in C_6
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let inst = FactorInstance { host: cycle(6), piece: Piece::Graph(p3.clone()), z: Vec::new(), mode: Mode::Find };
        let r = solve_factor(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.status, Status::Found);
        validate_pieces(&cycle(6), &Piece::Graph(p3), &[], &r.cliques).unwrap();
        let big = Piece::Graph(Graph::empty(13));
        assert!(solve_factor(&FactorInstance { host: Graph::empty(13), piece: big, z: vec![], mode: Mode::Find }, 5).is_err());
    }

    #[test]
    fn clique_search_examples() {
        assert_eq!(find_clique_in_subset(&Graph::complete(5), &[0, 1, 2], 3).unwrap(), Some(vec![0, 1, 2]));
        assert_eq!(find_clique_in_subset(&cycle(6), &[0, 1, 2, 3, 4, 5], 3).unwrap(), None);
        let g = gen_gnp(60, Probability::parse("0.9").unwrap(), &Seed::new(8));
        let mut hits = 0;
        for i in 0..20u64 {
            let mut rng = Seed::new(8).child(i).rng();
            let s: Vec<usize> = rand::seq::index::sample(&mut rng, 60, 30).into_iter().collect();
            if let Some(c) = find_clique_in_subset(&g, &s, 4).unwrap() {
                assert!(g.is_clique(&c) && c.iter().all(|v| s.contains(v)));
                hits += 1;
            }
        }
        assert_eq!(hits, 20);
        assert_eq!(find_clique_in_family(&cycle(6), &[vec![0, 2], vec![0, 1]]), Some(vec![0, 1]));
    }

    #[test]
    fn greedy_examples() {
        let k10 = Graph::complete(10);
        let c = greedy_conforming_collection(&k10, &[0, 1], 2, 2, &[]).unwrap().unwrap();
        assert_eq!(c.len(), 2);
        assert!(c[0].contains(&0) && c[1].contains(&1));
        validate_pieces(&k10, &Piece::Clique(3), &[0, 1], &c).unwrap();
        let f = greedy_conforming_collection(&Graph::empty(5), &[0], 2, 1, &[]).unwrap().unwrap_err();
        assert_eq!(f.vertex, Some(0));
        let c = greedy_conforming_collection(&k10, &[], 2, 3, &[]).unwrap().unwrap();
        assert_eq!(c.len(), 3);
        validate_pieces(&k10, &Piece::Clique(3), &[], &c).unwrap();
        let c = greedy_conforming_collection(&k10, &[9], 2, 3, &[0]).unwrap().unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|k| !k.contains(&0)));
    }

    #[test]
    fn fq_examples() {
        let e = find_fq(&Graph::complete(5), 2, 2, None).unwrap().unwrap();
        assert_eq!(e.len(), 3);
        let mut pm = Graph::empty(6);
        for i in 0..3 {
            pm.add_edge(2 * i, 2 * i + 1).unwrap();
        }
        assert_eq!(find_fq(&pm, 2, 2, None).unwrap(), None);
        let e = find_fq(&Graph::complete(9), 3, 2, None).unwrap().unwrap();
        assert_eq!(e.len(), 5);
        let e = find_fq(&Graph::complete(9), 2, 4, None).unwrap().unwrap();
        assert_eq!(e.len(), 7);
        let k9 = Graph::complete(9);
        assert!(k9.is_clique(&e[0..2]) && k9.is_clique(&e[1..3]));
        assert!(find_fq(&Graph::empty(41), 2, 2, None).is_err());
        assert!(find_fq(&k9, 1, 2, None).is_err());
    }

    #[test]
    fn extension_examples() {
        let k8 = Graph::complete(8);
        let x = extend_clique_into_part(&k8, &[0], &[4, 5, 6, 7], 3, &[]).unwrap().unwrap();
        assert!(x.iter().all(|v| [4, 5, 6, 7].contains(v)) && x.len() == 3);
        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(extend_clique_into_part(&star, &[0], &[1, 2, 3, 4], 2, &[]).unwrap(), None);
        let b = gen_complete_multipartite(&[3, 3, 3]).unwrap();
        assert_eq!(extend_clique_into_part(&b, &[0], &[3, 4, 5], 2, &[]).unwrap(), None);
        let x = extend_clique_into_part(&b, &[0], &[3, 4, 5, 6, 7, 8], 2, &[]).unwrap().unwrap();
        assert!(b.is_clique(&[0, x[0], x[1]]));
        assert!(extend_clique_into_part(&b, &[0], &[0, 3], 1, &[]).is_err());
    }

    /// Independent oracle: lowest uncovered vertex, all (r-1)-subsets beside it.
    pub(crate) fn naive_factor(g: &Graph, r: usize, z: &[usize]) -> bool {
        fn rec(g: &Graph, r: usize, z: &[usize], free: &mut Vec<bool>) -> bool {
            let Some(v) = free.iter().position(|&f| f) else { return true };
            free[v] = false;
            let rest: Vec<usize> = (v + 1..g.n()).filter(|&u| free[u]).collect();
            let mut ok = false;
            for combo in combos(&rest, r - 1) {
                let mut k = combo.clone();
                k.push(v);
                if !g.is_clique(&k) || k.iter().filter(|x| z.contains(x)).count() > 1 {
                    continue;
                }
                for &u in &combo {
                    free[u] = false;
                }
                ok = rec(g, r, z, free);
                for &u in &combo {
                    free[u] = true;
                }
                if ok {
                    break;
                }
            }
            free[v] = true;
            ok
        }
        fn combos(v: &[usize], k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for i in 0..v.len() {
                for mut c in combos(&v[i + 1..], k - 1) {
                    c.insert(0, v[i]);
                    out.push(c);
                }
            }
            out
        }
        rec(g, r, z, &mut vec![true; g.n()])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn agrees_with_naive(seed in any::<u64>(), r in 2usize..4, blocks in 1usize..4, dens in 3u32..10, zmask in any::<u16>()) {
            let n = r * blocks;
            let g = gen_gnp(n, Probability::from_f64(dens as f64 / 10.0).unwrap(), &Seed::new(seed));
            let z: Vec<usize> = (0..n).filter(|&i| zmask >> i & 1 == 1).collect();
            let res = solve(&g, r, &z);
            prop_assert_eq!(res.status == Status::Found, naive_factor(&g, r, &z));
            if res.status == Status::Found {
                validate_pieces(&g, &Piece::Clique(r), &z, &res.cliques).unwrap();
            }
        }

        #[test]
        fn supergraph_keeps_factor(seed in any::<u64>(), extra in any::<u64>()) {
            let g = gen_gnp(9, Probability::parse("0.5").unwrap(), &Seed::new(seed));
            let h = crate::graph::graph_union(&g, &gen_gnp(9, Probability::parse("0.3").unwrap(), &Seed::new(extra))).unwrap();
            if solve(&g, 3, &[]).status == Status::Found {
                prop_assert_eq!(solve(&h, 3, &[]).status, Status::Found);
            }
        }

        #[test]
        fn max_partial_matches_oracle(seed in any::<u64>(), n in 3usize..10) {
            let g = gen_gnp(n, Probability::parse("0.45").unwrap(), &Seed::new(seed));
            let r = max_partial_factor(&g, 3, DEFAULT_BUDGET).unwrap();
            validate_pieces(&g, &Piece::Clique(3), &[], &r.cliques).unwrap();
            // oracle: best over subsets with a factor
            let mut best = 0;
            for mask in 0u32..1 << n {
                let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                if s.len() % 3 == 0 && s.len() > best {
                    let (sub, _) = g.induced_subgraph(&s).unwrap();
                    if naive_factor(&sub, 3, &[]) {
                        best = s.len();
                    }
                }
            }
            prop_assert_eq!(r.covered, best);
        }
    }
}
