//! Lexicographic local search over factors into cliques `K_1..K_{m+1}` and gadgets
//! `Q_1..Q_m`, and the cover / independent-set dichotomy built on it.
//!
//! Every move rewrites a few pieces and strictly increases the index
//! `(φ_{m+1}, φ_m, q_m, .., φ_1, q_1)` where `k_i` counts `K_i` pieces, `q_h` counts `Q_h`
//! pieces, `φ_h = k_h + (s-t) q_h` and `φ_{m+1} = k_{m+1} + Σ_h ((m-h)s+t) q_h`.

use crate::error::{Error, Result};
use crate::gadget::{assemble_b_packing, gadget_counts, PackingCert, PlacedGadget};
use crate::graph::{bits_of, Bits, Graph};
use crate::mis::greedy_independent;
use crate::params::{RParams, Variant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TilePiece {
    Clique { vertices: Vec<usize> },
    Gadget { h: usize, l: Vec<Vec<usize>>, m: Vec<Vec<usize>>, n: Vec<Vec<usize>> },
}

impl TilePiece {
    fn clique(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        TilePiece::Clique { vertices: v }
    }

    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = match self {
            TilePiece::Clique { vertices } => vertices.clone(),
            TilePiece::Gadget { l, m, n, .. } => l.iter().chain(m).chain(n).flatten().copied().collect(),
        };
        v.sort_unstable();
        v
    }

    fn clique_size(&self) -> Option<usize> {
        match self {
            TilePiece::Clique { vertices } => Some(vertices.len()),
            _ => None,
        }
    }
}

pub type IndexVector = Vec<usize>;

#[derive(Debug, Clone)]
pub struct PFactor {
    pub host: Graph,
    pub params: RParams,
    pub pieces: Vec<TilePiece>,
}

fn is_join(g: &Graph, a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|&u| b.iter().all(|&v| g.has_edge(u, v)))
}

fn gadget_ok(g: &Graph, p: &RParams, h: usize, l: &[Vec<usize>], m: &[Vec<usize>], n: &[Vec<usize>]) -> bool {
    let (x, y) = gadget_counts(p, h);
    l.len() == x
        && m.len() == y
        && n.len() == y
        && l.iter().all(|s| s.len() == h && g.is_clique(s))
        && m.iter().all(|s| s.len() == p.m - h + 1 && g.is_clique(s))
        && n.iter().all(|s| s.len() == h && g.is_clique(s))
        && l.iter().all(|a| m.iter().all(|b| is_join(g, a, b)))
        && m.iter().zip(n).all(|(a, b)| is_join(g, a, b))
}

/// Comma-separated move names accepted by [`MoveKind::parse_list`].
pub const DEFAULT_MOVE_ORDER: [MoveKind; 6] = [
    MoveKind::MergeToQm,
    MoveKind::ShiftVertex,
    MoveKind::BreakGadget,
    MoveKind::FormQjFromCliques,
    MoveKind::FormQjFromQh,
    MoveKind::MatchingSwap,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    MergeToQm,
    ShiftVertex,
    BreakGadget,
    FormQjFromCliques,
    FormQjFromQh,
    MatchingSwap,
}

impl MoveKind {
    pub fn name(&self) -> &'static str {
        match self {
            MoveKind::MergeToQm => "merge_to_qm",
            MoveKind::ShiftVertex => "shift_vertex",
            MoveKind::BreakGadget => "break_gadget",
            MoveKind::FormQjFromCliques => "form_qj_from_cliques",
            MoveKind::FormQjFromQh => "form_qj_from_qh",
            MoveKind::MatchingSwap => "matching_swap",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<MoveKind>> {
        s.split(',')
            .map(|w| {
                DEFAULT_MOVE_ORDER
                    .iter()
                    .find(|k| k.name() == w.trim())
                    .copied()
                    .ok_or_else(|| Error::Parameter(format!("unknown move {w:?}")))
            })
            .collect()
    }
}

/// Pieces to drop (by index) and pieces to add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub kind: MoveKind,
    pub remove: Vec<usize>,
    pub add: Vec<TilePiece>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    #[serde(rename = "move")]
    pub kind: MoveKind,
    pub pieces_before: Vec<TilePiece>,
    pub pieces_after: Vec<TilePiece>,
    pub index_before: IndexVector,
    pub index_after: IndexVector,
}

pub fn init_trivial(host: &Graph, params: &RParams) -> Result<PFactor> {
    params.require(Variant::A)?;
    let pieces = (0..host.n()).map(|v| TilePiece::Clique { vertices: vec![v] }).collect();
    Ok(PFactor { host: host.clone(), params: *params, pieces })
}

impl PFactor {
    /// `(φ_{m+1}, φ_m, q_m, .., φ_1, q_1)`.
    pub fn compute_index(&self) -> IndexVector {
        let p = &self.params;
        let mut k = vec![0usize; p.m + 2];
        let mut q = vec![0usize; p.m + 1];
        for piece in &self.pieces {
            match piece {
                TilePiece::Clique { vertices } => k[vertices.len()] += 1,
                TilePiece::Gadget { h, .. } => q[*h] += 1,
            }
        }
        let mut phi_top = k[p.m + 1];
        for h in 1..=p.m {
            phi_top += gadget_counts(p, h).1 * q[h];
        }
        let mut idx = vec![phi_top];
        for h in (1..=p.m).rev() {
            idx.push(k[h] + (p.s - p.t) * q[h]);
            idx.push(q[h]);
        }
        idx
    }

    /// Disjoint cover of `V` by valid pieces.
    pub fn validate(&self) -> Result<()> {
        let g = &self.host;
        let mut seen = vec![false; g.n()];
        for piece in &self.pieces {
            for v in piece.vertices() {
                if v >= g.n() || std::mem::replace(&mut seen[v], true) {
                    return Err(Error::Validation(format!("vertex {v} covered twice or out of range")));
                }
            }
            let ok = match piece {
                TilePiece::Clique { vertices } => !vertices.is_empty() && vertices.len() <= self.params.m + 1 && g.is_clique(vertices),
                TilePiece::Gadget { h, l, m, n } => *h >= 1 && *h <= self.params.m && gadget_ok(g, &self.params, *h, l, m, n),
            };
            if !ok {
                return Err(Error::Validation(format!("invalid piece {piece:?}")));
            }
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::Validation(format!("vertex {v} uncovered")));
        }
        Ok(())
    }

    /// Vertices in `K_i` pieces, indexed by `i` (entry 0 unused).
    pub fn clique_classes(&self) -> Vec<Vec<usize>> {
        let mut a = vec![Vec::new(); self.params.m + 2];
        for piece in &self.pieces {
            if let TilePiece::Clique { vertices } = piece {
                a[vertices.len()].extend(vertices);
            }
        }
        for v in &mut a {
            v.sort_unstable();
        }
        a
    }

    pub fn apply(&mut self, rw: &Rewrite) {
        let mut drop = vec![false; self.pieces.len()];
        for &i in &rw.remove {
            drop[i] = true;
        }
        let mut i = 0;
        self.pieces.retain(|_| {
            i += 1;
            !drop[i - 1]
        });
        self.pieces.extend(rw.add.iter().cloned());
    }

    pub fn find_move(&self, kind: MoveKind) -> Option<Rewrite> {
        match kind {
            MoveKind::MergeToQm => self.move_merge_to_qm(),
            MoveKind::ShiftVertex => self.move_shift_vertex(),
            MoveKind::BreakGadget => self.move_break_gadget(),
            MoveKind::FormQjFromCliques => self.move_form_qj(false),
            MoveKind::FormQjFromQh => self.move_form_qj(true),
            MoveKind::MatchingSwap => self.move_matching_swap(),
        }
    }

    /// `t = 0`: `s` pieces `K_m` become the L-sets of one `Q_m`.
    pub fn move_merge_to_qm(&self) -> Option<Rewrite> {
        let p = &self.params;
        if p.t != 0 {
            return None;
        }
        let idx: Vec<usize> = (0..self.pieces.len()).filter(|&i| self.pieces[i].clique_size() == Some(p.m)).take(p.s).collect();
        if idx.len() < p.s {
            return None;
        }
        let l = idx.iter().map(|&i| self.pieces[i].vertices()).collect();
        Some(Rewrite { kind: MoveKind::MergeToQm, remove: idx, add: vec![TilePiece::Gadget { h: p.m, l, m: vec![], n: vec![] }] })
    }

    /// `x ∈ K_j` joined to all of `K_h`, `j ≤ h ≤ m`: gives `K_{j-1}` and `K_{h+1}`.
    pub fn move_shift_vertex(&self) -> Option<Rewrite> {
        let p = &self.params;
        let g = &self.host;
        let top = if p.t > 0 { p.m } else { p.m - 1 };
        for h in (1..=top).rev() {
            for (bi, b) in self.pieces.iter().enumerate() {
                let TilePiece::Clique { vertices: bv } = b else { continue };
                if bv.len() != h {
                    continue;
                }
                let cn = g.common_bits(bv);
                for (ai, a) in self.pieces.iter().enumerate() {
                    let TilePiece::Clique { vertices: av } = a else { continue };
                    if ai == bi || av.len() > h {
                        continue;
                    }
                    if let Some(&x) = av.iter().find(|&&x| cn.contains(x)) {
                        let mut add = vec![];
                        let rest: Vec<usize> = av.iter().copied().filter(|&v| v != x).collect();
                        if !rest.is_empty() {
                            add.push(TilePiece::clique(rest));
                        }
                        let mut grown = bv.clone();
                        grown.push(x);
                        add.push(TilePiece::clique(grown));
                        return Some(Rewrite { kind: MoveKind::ShiftVertex, remove: vec![ai, bi], add });
                    }
                }
            }
        }
        None
    }

    /// Pieces replacing a dismantled gadget once the set `u_sel` (an L-set when
    /// `from_n` is `None`, else `N_i`) has been taken away: the other L-sets become
    /// `K_h`, the M/N pairs become `K_{m+1}`, and for `N_i` the pair `M_i ∪ L_1` does too.
    fn dismantle(l: &[Vec<usize>], m: &[Vec<usize>], n: &[Vec<usize>], taken_l: Option<usize>, from_n: Option<usize>) -> Vec<TilePiece> {
        let mut out = Vec::new();
        let mut l_left: Vec<&Vec<usize>> = l.iter().enumerate().filter(|&(i, _)| Some(i) != taken_l).map(|(_, s)| s).collect();
        for (i, (ms, ns)) in m.iter().zip(n).enumerate() {
            if Some(i) == from_n {
                let l1 = l_left.remove(0);
                out.push(TilePiece::clique(ms.iter().chain(l1).copied().collect()));
            } else {
                out.push(TilePiece::clique(ms.iter().chain(ns).copied().collect()));
            }
        }
        for s in l_left {
            out.push(TilePiece::clique(s.clone()));
        }
        out
    }

    /// Either `x ∈ K_j` joined to an L/N-set `U` of some `Q_h`, `h ∈ [j, m]` (giving
    /// `K_{h+1} = U + x` and `K_{j-1}`), or, for `h < j`, some `x ∈ U` joined to all of
    /// `K_j` (giving `K_{j+1}` and `K_{h-1}`). The gadget is dismantled.
    pub fn move_break_gadget(&self) -> Option<Rewrite> {
        let g = &self.host;
        for (gi, gp) in self.pieces.iter().enumerate() {
            let TilePiece::Gadget { h, l, m, n } = gp else { continue };
            let h = *h;
            let sets: Vec<(Option<usize>, Option<usize>, &Vec<usize>)> = l
                .iter()
                .enumerate()
                .map(|(i, s)| (Some(i), None, s))
                .chain(n.iter().enumerate().map(|(i, s)| (None, Some(i), s)))
                .collect();
            for (ci, cp) in self.pieces.iter().enumerate() {
                let TilePiece::Clique { vertices: kv } = cp else { continue };
                let j = kv.len();
                if j > self.params.m {
                    continue;
                }
                for &(tl, tn, u) in &sets {
                    let mut add = Self::dismantle(l, m, n, tl, tn);
                    if j <= h {
                        let cn = g.common_bits(u);
                        if let Some(&x) = kv.iter().find(|&&x| cn.contains(x)) {
                            let rest: Vec<usize> = kv.iter().copied().filter(|&v| v != x).collect();
                            if !rest.is_empty() {
                                add.push(TilePiece::clique(rest));
                            }
                            add.push(TilePiece::clique(u.iter().copied().chain([x]).collect()));
                            return Some(Rewrite { kind: MoveKind::BreakGadget, remove: vec![gi, ci], add });
                        }
                    } else {
                        let cn = g.common_bits(kv);
                        if let Some(&x) = u.iter().find(|&&x| cn.contains(x)) {
                            let rest: Vec<usize> = u.iter().copied().filter(|&v| v != x).collect();
                            if !rest.is_empty() {
                                add.push(TilePiece::clique(rest));
                            }
                            add.push(TilePiece::clique(kv.iter().copied().chain([x]).collect()));
                            return Some(Rewrite { kind: MoveKind::BreakGadget, remove: vec![gi, ci], add });
                        }
                    }
                }
            }
        }
        None
    }

    /// Builds one `Q_j` from `s-t` pieces `K_j` (the L-sets) and `(m-j)s+t` right-hand
    /// blocks, each an `(M, N)` pair inside the common neighbourhood rule.
    /// With `from_gadgets = false` the blocks are `K_{m+1}` pieces split as
    /// `M = first m-j+1 vertices adjacent to all L-sets`; otherwise at least one block is an
    /// M-set `M_i` of some `Q_h`, `h < j`, split into `C` (new M) and `D ∪ N_i` (new N).
    pub fn move_form_qj(&self, from_gadgets: bool) -> Option<Rewrite> {
        let p = &self.params;
        let g = &self.host;
        for j in (1..=p.m).rev() {
            let (x, y) = gadget_counts(p, j);
            if y == 0 {
                continue;
            }
            let need_m = p.m - j + 1;
            let left: Vec<usize> = (0..self.pieces.len()).filter(|&i| self.pieces[i].clique_size() == Some(j)).collect();
            if left.len() < x {
                continue;
            }
            // right-hand blocks: (piece index, Some(M-set index) for gadgets, vertices)
            let mut blocks: Vec<(usize, Option<usize>, Vec<usize>)> = Vec::new();
            for (i, piece) in self.pieces.iter().enumerate() {
                match piece {
                    TilePiece::Clique { vertices } if vertices.len() == p.m + 1 => blocks.push((i, None, vertices.clone())),
                    TilePiece::Gadget { h, m, .. } if from_gadgets && *h < j => {
                        for (mi, ms) in m.iter().enumerate() {
                            blocks.push((i, Some(mi), ms.clone()));
                        }
                    }
                    _ => {}
                }
            }
            if blocks.len() < y {
                continue;
            }
            let mut chosen = Vec::new();
            let full = crate::graph::full_bits(g.n());
            if let Some(sel) = self.choose_left(&left, x, 0, &full, &blocks, need_m, y, from_gadgets, &mut chosen) {
                return Some(self.build_qj(j, &chosen, &blocks, &sel));
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn choose_left(
        &self,
        left: &[usize],
        x: usize,
        from: usize,
        cn: &Bits,
        blocks: &[(usize, Option<usize>, Vec<usize>)],
        need_m: usize,
        y: usize,
        from_gadgets: bool,
        chosen: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        let viable: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].2.iter().filter(|&&v| cn.contains(v)).count() >= need_m).collect();
        if viable.len() < y {
            return None;
        }
        if chosen.len() == x {
            let gadget_blocks = viable.iter().filter(|&&b| blocks[b].1.is_some()).count();
            if from_gadgets && gadget_blocks == 0 {
                return None;
            }
            // prefer gadget blocks when asked for, so at least one is used
            let mut sel: Vec<usize> = if from_gadgets {
                viable.iter().copied().filter(|&b| blocks[b].1.is_some()).chain(viable.iter().copied().filter(|&b| blocks[b].1.is_none())).take(y).collect()
            } else {
                viable[..y].to_vec()
            };
            sel.sort_unstable();
            return Some(sel);
        }
        for i in from..left.len() {
            if left.len() - i < x - chosen.len() {
                break;
            }
            let verts = self.pieces[left[i]].vertices();
            let mut next = cn.clone();
            for &v in &verts {
                next.intersect_with(self.host.adj(v));
            }
            chosen.push(left[i]);
            if let Some(sel) = self.choose_left(left, x, i + 1, &next, blocks, need_m, y, from_gadgets, chosen) {
                return Some(sel);
            }
            chosen.pop();
        }
        None
    }

    fn build_qj(&self, j: usize, left: &[usize], blocks: &[(usize, Option<usize>, Vec<usize>)], sel: &[usize]) -> Rewrite {
        let p = &self.params;
        let l: Vec<Vec<usize>> = left.iter().map(|&i| self.pieces[i].vertices()).collect();
        let all_l: Vec<usize> = l.iter().flatten().copied().collect();
        let cn = self.host.common_bits(&all_l);
        let need_m = p.m - j + 1;
        let mut m_sets = Vec::new();
        let mut n_sets = Vec::new();
        let mut remove: Vec<usize> = left.to_vec();
        let mut used_pairs: Vec<(usize, usize)> = Vec::new();
        for &b in sel {
            let (pi, mi, verts) = &blocks[b];
            let c: Vec<usize> = verts.iter().copied().filter(|&v| cn.contains(v)).take(need_m).collect();
            let mut d: Vec<usize> = verts.iter().copied().filter(|v| !c.contains(v)).collect();
            if let (Some(mi), TilePiece::Gadget { n, .. }) = (mi, &self.pieces[*pi]) {
                d.extend(&n[*mi]);
                used_pairs.push((*pi, *mi));
            }
            d.sort_unstable();
            m_sets.push(c);
            n_sets.push(d);
            if !remove.contains(pi) {
                remove.push(*pi);
            }
        }
        let mut add = vec![TilePiece::Gadget { h: j, l, m: m_sets, n: n_sets }];
        // dismantle source gadgets: unused pairs become K_{m+1}, L-sets become K_h
        for &pi in &remove {
            if let TilePiece::Gadget { l, m, n, .. } = &self.pieces[pi] {
                for (mi, (ms, ns)) in m.iter().zip(n).enumerate() {
                    if !used_pairs.contains(&(pi, mi)) {
                        add.push(TilePiece::clique(ms.iter().chain(ns).copied().collect()));
                    }
                }
                for s in l {
                    add.push(TilePiece::clique(s.clone()));
                }
            }
        }
        remove.sort_unstable();
        let kind = if used_pairs.is_empty() { MoveKind::FormQjFromCliques } else { MoveKind::FormQjFromQh };
        Rewrite { kind, remove, add }
    }

    /// Non-edges `x–y` with `x` in a `K_j` piece and `y` in an L/N-set `U` of some `Q_h`,
    /// `h ∈ [j, m]`, such that `x` sees `U - y` and every M-set joined to `U`.
    pub fn aux_graph(&self, j: usize) -> AuxGraph {
        let g = &self.host;
        let a_j: Vec<usize> = self.clique_classes()[j].clone();
        let mut w = Vec::new();
        let mut owner = Vec::new();
        for (gi, piece) in self.pieces.iter().enumerate() {
            let TilePiece::Gadget { h, l, m, n } = piece else { continue };
            if *h < j {
                continue;
            }
            let all_m: Vec<usize> = m.iter().flatten().copied().collect();
            for s in l {
                for &y in s {
                    w.push(y);
                    owner.push((gi, s.clone(), all_m.clone()));
                }
            }
            for (i, s) in n.iter().enumerate() {
                for &y in s {
                    w.push(y);
                    owner.push((gi, s.clone(), m[i].clone()));
                }
            }
        }
        let mut adj = vec![Vec::new(); w.len()];
        for (wi, &y) in w.iter().enumerate() {
            let (_, u, ms) = &owner[wi];
            for &x in &a_j {
                if !g.has_edge(x, y) && u.iter().all(|&v| v == y || g.has_edge(x, v)) && ms.iter().all(|&v| g.has_edge(x, v)) {
                    adj[wi].push(x);
                }
            }
        }
        AuxGraph { j, a_j, w, adj }
    }

    /// A `K_{j+1}` on vertices of high `H`-degree, matched into distinct `x`'s which take
    /// the places of the `y`'s inside their gadgets.
    pub fn move_matching_swap(&self) -> Option<Rewrite> {
        let g = &self.host;
        for j in 1..=self.params.m {
            let aux = self.aux_graph(j);
            let z: Vec<usize> = (0..aux.w.len()).filter(|&i| aux.adj[i].len() > j).collect();
            if z.len() < j + 1 {
                continue;
            }
            let zv: Vec<usize> = z.iter().map(|&i| aux.w[i]).collect();
            let Ok(cliques) = g.enumerate_cliques(j + 1, Some(&zv), Some(2000)) else { continue };
            for cl in cliques {
                let rows: Vec<usize> = cl.iter().map(|y| aux.w.iter().position(|w| w == y).expect("y in W")).collect();
                let Some(mate) = match_rows(&rows.iter().map(|&r| aux.adj[r].clone()).collect::<Vec<_>>()) else { continue };
                if let Some(rw) = self.try_swap(&cl, &mate) {
                    return Some(rw);
                }
            }
        }
        None
    }

    fn try_swap(&self, ys: &[usize], xs: &[usize]) -> Option<Rewrite> {
        let sub = |v: usize| ys.iter().position(|&y| y == v).map_or(v, |i| xs[i]);
        let mut remove = Vec::new();
        let mut add = Vec::new();
        let xb = bits_of(self.host.n(), xs);
        let yb = bits_of(self.host.n(), ys);
        for (i, piece) in self.pieces.iter().enumerate() {
            let verts = piece.vertices();
            let hits_y = verts.iter().any(|&v| yb.contains(v));
            let hits_x = verts.iter().any(|&v| xb.contains(v));
            match piece {
                TilePiece::Gadget { h, l, m, n } if hits_y => {
                    let map = |s: &Vec<Vec<usize>>| s.iter().map(|set| set.iter().map(|&v| sub(v)).collect::<Vec<_>>()).collect::<Vec<_>>();
                    let (l2, m2, n2) = (map(l), map(m), map(n));
                    if !gadget_ok(&self.host, &self.params, *h, &l2, &m2, &n2) {
                        return None;
                    }
                    remove.push(i);
                    add.push(TilePiece::Gadget { h: *h, l: l2, m: m2, n: n2 });
                }
                TilePiece::Clique { vertices } if hits_x => {
                    remove.push(i);
                    let rest: Vec<usize> = vertices.iter().copied().filter(|&v| !xb.contains(v)).collect();
                    if !rest.is_empty() {
                        add.push(TilePiece::clique(rest));
                    }
                }
                _ if hits_y || hits_x => return None,
                _ => {}
            }
        }
        add.push(TilePiece::clique(ys.to_vec()));
        Some(Rewrite { kind: MoveKind::MatchingSwap, remove, add })
    }

    /// The gadgets and `K_{m+1}` pieces as copies for an exact `{(1/b)⋉T}`-packing.
    pub fn packing_certificate(&self) -> Result<PackingCert> {
        let mut gadgets = Vec::new();
        for piece in &self.pieces {
            match piece {
                TilePiece::Clique { vertices } if vertices.len() == self.params.m + 1 => {
                    gadgets.push(PlacedGadget { h: None, map: vertices.clone() })
                }
                TilePiece::Gadget { h, l, m, n } => {
                    gadgets.push(PlacedGadget { h: Some(*h), map: l.iter().chain(m).chain(n).flatten().copied().collect() })
                }
                _ => {}
            }
        }
        assemble_b_packing(&self.params, &self.host, &gadgets)
    }
}

/// Bipartite auxiliary graph between `A_j` and the L/N vertices `W` of gadgets `Q_h`, `h ≥ j`.
#[derive(Debug, Clone)]
pub struct AuxGraph {
    pub j: usize,
    pub a_j: Vec<usize>,
    pub w: Vec<usize>,
    /// `adj[i]`: H-neighbours (in `A_j`) of `w[i]`.
    pub adj: Vec<Vec<usize>>,
}

/// A system of distinct representatives via augmenting paths.
fn match_rows(rows: &[Vec<usize>]) -> Option<Vec<usize>> {
    fn augment(r: usize, rows: &[Vec<usize>], owner: &mut std::collections::HashMap<usize, usize>, seen: &mut Vec<usize>) -> bool {
        for &x in &rows[r] {
            if seen.contains(&x) {
                continue;
            }
            seen.push(x);
            let free = match owner.get(&x) {
                None => true,
                Some(&o) => augment(o, rows, owner, seen),
            };
            if free {
                owner.insert(x, r);
                return true;
            }
        }
        false
    }
    let mut owner = std::collections::HashMap::new();
    for r in 0..rows.len() {
        if !augment(r, rows, &mut owner, &mut Vec::new()) {
            return None;
        }
    }
    let mut mate = vec![0; rows.len()];
    for (x, r) in owner {
        mate[r] = x;
    }
    Some(mate)
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub moves: Vec<MoveKind>,
    pub step_limit: usize,
    pub validate_each_step: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { moves: DEFAULT_MOVE_ORDER.to_vec(), step_limit: 100_000, validate_each_step: cfg!(debug_assertions) }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub factor: PFactor,
    pub trace: Vec<MoveRecord>,
    pub step_limit_hit: bool,
}

/// First-applicable improvement moves until none applies or the step limit is reached.
pub fn run_local_search(host: &Graph, params: &RParams, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let mut f = init_trivial(host, params)?;
    let mut trace = Vec::new();
    let mut hit = false;
    'outer: loop {
        if trace.len() >= cfg.step_limit {
            hit = true;
            break;
        }
        let before = f.compute_index();
        for &kind in &cfg.moves {
            if let Some(rw) = f.find_move(kind) {
                let removed: Vec<TilePiece> = rw.remove.iter().map(|&i| f.pieces[i].clone()).collect();
                f.apply(&rw);
                let after = f.compute_index();
                if after <= before {
                    return Err(Error::Validation(format!("{} did not raise the index: {before:?} -> {after:?}", kind.name())));
                }
                if cfg.validate_each_step {
                    f.validate()?;
                }
                trace.push(MoveRecord { kind: rw.kind, pieces_before: removed, pieces_after: rw.add, index_before: before, index_after: after });
                continue 'outer;
            }
        }
        break;
    }
    Ok(SearchOutcome { factor: f, trace, step_limit_hit: hit })
}

#[derive(Debug, Clone)]
pub struct DichotomyConfig {
    pub gamma: f64,
    pub beta: f64,
    /// `None`: `max(r, ⌈n/10⌉)`.
    pub c_cap: Option<usize>,
    pub search: SearchConfig,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig { gamma: 0.1, beta: 0.05, c_cap: None, search: SearchConfig::default() }
    }
}

pub fn default_c_cap(n: usize, r: usize) -> usize {
    r.max(n.div_ceil(10))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub j: usize,
    pub a_j: usize,
    pub w: usize,
    pub h_edges: usize,
    pub z: usize,
    pub independent: usize,
    pub target: f64,
    /// `(K_j, K_{m+1})` piece pairs with edge density above `α - 2β`.
    pub dense_clique_pairs: usize,
    pub c_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum Dichotomy {
    Cover { leftover: Vec<usize> },
    IndependentSet { set: Vec<usize>, report: StageReport },
    Inconclusive { leftover: Vec<usize>, set: Vec<usize>, report: StageReport },
}

#[derive(Debug, Clone)]
pub struct DichotomyOutcome {
    pub result: Dichotomy,
    pub search: SearchOutcome,
}

/// Improves an independent set by 1-for-2 swaps and greedy refills.
fn improve_independent(g: &Graph, within: &[usize], mut s: Vec<usize>) -> Vec<usize> {
    let wb = bits_of(g.n(), within);
    loop {
        let sb = bits_of(g.n(), &s);
        let mut improved = false;
        'search: for &v in &s {
            // vertices whose only S-neighbour is v
            let cands: Vec<usize> = wb
                .ones()
                .filter(|&u| !sb.contains(u) && g.has_edge(u, v) && g.adj(u).intersection_count(&sb) == 1)
                .collect();
            for (i, &a) in cands.iter().enumerate() {
                for &b in &cands[i + 1..] {
                    if !g.has_edge(a, b) {
                        s.retain(|&w| w != v);
                        s.push(a);
                        s.push(b);
                        improved = true;
                        break 'search;
                    }
                }
            }
        }
        if !improved {
            break;
        }
        s = greedy_independent(g, &s, within);
    }
    s.sort_unstable();
    s
}

pub fn run_dichotomy(host: &Graph, params: &RParams, cfg: &DichotomyConfig) -> Result<DichotomyOutcome> {
    let search = run_local_search(host, params, &cfg.search)?;
    let f = &search.factor;
    let n = host.n();
    let c_cap = cfg.c_cap.unwrap_or_else(|| default_c_cap(n, params.r));
    let classes = f.clique_classes();
    let leftover: Vec<usize> = {
        let mut v: Vec<usize> = classes[1..=params.m].iter().flatten().copied().collect();
        v.sort_unstable();
        v
    };
    if leftover.len() <= c_cap {
        return Ok(DichotomyOutcome { result: Dichotomy::Cover { leftover }, search });
    }
    let m = params.m;
    let j = (1..=m).find(|&j| classes[j].len() * m >= c_cap).expect("some class is large");
    let aux = f.aux_graph(j);
    let z: Vec<usize> = (0..aux.w.len()).filter(|&i| aux.adj[i].len() > j).map(|i| aux.w[i]).collect();
    let mut s = greedy_independent(host, &[], &z);
    s = improve_independent(host, &z, s);
    let order: Vec<usize> = classes[j].iter().copied().chain(0..n).collect();
    s = greedy_independent(host, &s, &order);
    s = improve_independent(host, &(0..n).collect::<Vec<_>>(), s);
    if !host.is_independent(&s)? {
        return Err(Error::Validation("independent set extraction produced an edge".into()));
    }
    let alpha = 1.0 - params.s as f64 / params.r as f64;
    let mut dense = 0;
    for a in f.pieces.iter().filter(|p| p.clique_size() == Some(j)) {
        for b in f.pieces.iter().filter(|p| p.clique_size() == Some(m + 1)) {
            let (av, bv) = (a.vertices(), b.vertices());
            let e = host.edge_count_between(&av, &bv)? as f64;
            if e / (av.len() * bv.len()) as f64 > alpha - 2.0 * cfg.beta {
                dense += 1;
            }
        }
    }
    let target = (params.s as f64 / params.r as f64 - cfg.gamma) * n as f64;
    let report = StageReport {
        j,
        a_j: classes[j].len(),
        w: aux.w.len(),
        h_edges: aux.adj.iter().map(Vec::len).sum(),
        z: z.len(),
        independent: s.len(),
        target,
        dense_clique_pairs: dense,
        c_cap,
    };
    let result = if s.len() as f64 >= target {
        Dichotomy::IndependentSet { set: s, report }
    } else {
        Dichotomy::Inconclusive { leftover, set: s, report }
    };
    Ok(DichotomyOutcome { result, search })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadget::{build_q, PackingMode};
    use crate::graph::{gen_extremal_host, gen_gnp, graph_union};
    use crate::ratio::{q, Probability};
    use crate::rng::Seed;

    fn pa(m: usize, s: usize, t: usize) -> RParams {
        RParams::variant_a(m, s, t).unwrap()
    }

    fn factor(host: Graph, p: RParams, pieces: Vec<TilePiece>) -> PFactor {
        let f = PFactor { host, params: p, pieces };
        f.validate().unwrap();
        f
    }

    fn cl(v: &[usize]) -> TilePiece {
        TilePiece::clique(v.to_vec())
    }

    #[test]
    fn trivial_init_and_index() {
        let f = init_trivial(&Graph::complete(5), &pa(2, 2, 1)).unwrap();
        assert_eq!(f.pieces.len(), 5);
        assert_eq!(f.compute_index(), vec![0, 0, 0, 5, 0]);
        assert_eq!(init_trivial(&Graph::empty(3), &pa(2, 2, 1)).unwrap().compute_index(), vec![0, 0, 0, 3, 0]);
        assert_eq!(init_trivial(&Graph::empty(7), &pa(2, 2, 1)).unwrap().compute_index(), vec![0, 0, 0, 7, 0]);
        assert!(init_trivial(&Graph::empty(3), &RParams::variant_b(2, 2, 2).unwrap()).is_err());
    }

    #[test]
    fn index_examples() {
        let f = factor(Graph::complete(5), pa(2, 2, 1), vec![cl(&[0, 1, 2]), cl(&[3, 4])]);
        assert_eq!(f.compute_index(), vec![1, 1, 0, 0, 0]);
        let g = build_q(&pa(2, 2, 1), 1).unwrap();
        let f = factor(g.graph.clone(), pa(2, 2, 1), vec![TilePiece::Gadget { h: 1, l: g.l_sets, m: g.m_sets, n: g.n_sets }]);
        assert_eq!(f.compute_index(), vec![3, 0, 0, 1, 1]);
    }

    #[test]
    fn merge_example() {
        let p = pa(2, 2, 0);
        let f = factor(Graph::complete(4), p, vec![cl(&[0, 1]), cl(&[2, 3])]);
        let before = f.compute_index();
        assert_eq!(before, vec![0, 2, 0, 0, 0]);
        let rw = f.move_merge_to_qm().unwrap();
        let mut g = f.clone();
        g.apply(&rw);
        g.validate().unwrap();
        assert_eq!(g.compute_index(), vec![0, 2, 1, 0, 0]);
        let f1 = factor(Graph::complete(4), pa(2, 2, 1), vec![cl(&[0, 1]), cl(&[2, 3])]);
        assert!(f1.move_merge_to_qm().is_none());
    }

    #[test]
    fn shift_examples() {
        let p = pa(2, 2, 1);
        let f = factor(Graph::complete(5), p, vec![cl(&[0]), cl(&[1, 2]), cl(&[3, 4])]);
        let rw = f.move_shift_vertex().unwrap();
        let mut g = f.clone();
        g.apply(&rw);
        assert_eq!(g.compute_index()[0], 1);
        assert_eq!(g.pieces.len(), 2);
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(factor(two, p, vec![cl(&[0, 1]), cl(&[2, 3])]).move_shift_vertex().is_none());
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(factor(path, p, vec![cl(&[0]), cl(&[1, 2])]).move_shift_vertex().is_none());
    }

    #[test]
    fn form_from_cliques_example() {
        let p = pa(2, 2, 1);
        let f = factor(Graph::complete(10), p, vec![cl(&[0]), cl(&[1, 2, 3]), cl(&[4, 5, 6]), cl(&[7, 8, 9])]);
        let rw = f.move_form_qj(false).unwrap();
        let mut g = f.clone();
        g.apply(&rw);
        g.validate().unwrap();
        let TilePiece::Gadget { h, l, m, n } = &g.pieces[0] else { panic!("expected gadget") };
        assert_eq!((*h, l.len(), m.len(), n.len()), (1, 1, 3, 3));
        assert!(m.iter().all(|s| s.len() == 2));
        assert_eq!(g.compute_index()[0], f.compute_index()[0]);
        // K_1 with no neighbours in the triangles
        let mut host = Graph::empty(10);
        for b in [[1, 2, 3], [4, 5, 6], [7, 8, 9]] {
            host.add_edge(b[0], b[1]).unwrap();
            host.add_edge(b[0], b[2]).unwrap();
            host.add_edge(b[1], b[2]).unwrap();
        }
        let f = factor(host, p, vec![cl(&[0]), cl(&[1, 2, 3]), cl(&[4, 5, 6]), cl(&[7, 8, 9])]);
        assert!(f.move_form_qj(false).is_none());
        let f = factor(Graph::complete(4), p, vec![cl(&[0]), cl(&[1]), cl(&[2, 3])]);
        assert!(f.move_form_qj(false).is_none());
    }

    #[test]
    fn form_from_gadget_example() {
        // m=3, s=2, t=1: r=7; Q_1 has 1 L-vertex, y_1 = 5 pairs (M: K_3, N: K_1) = 21 vertices.
        // Q_2 needs x=1 L-set K_2 and y_2 = 3 pairs (M: K_2, N: K_2).
        let p = pa(3, 2, 1);
        let n = 2 + 3 * 21;
        let host = Graph::complete(n);
        let mut pieces = vec![cl(&[0, 1])];
        for c in 0..3 {
            let base = 2 + 21 * c;
            let gad = build_q(&p, 1).unwrap();
            let sh = |s: &Vec<Vec<usize>>| s.iter().map(|v| v.iter().map(|x| x + base).collect()).collect();
            pieces.push(TilePiece::Gadget { h: 1, l: sh(&gad.l_sets), m: sh(&gad.m_sets), n: sh(&gad.n_sets) });
        }
        let f = factor(host, p, pieces);
        let rw = f.move_form_qj(true).unwrap();
        assert_eq!(rw.kind, MoveKind::FormQjFromQh);
        let mut g = f.clone();
        g.apply(&rw);
        g.validate().unwrap();
        let (a, b) = (f.compute_index(), g.compute_index());
        assert_eq!(a[0], b[0]);
        assert_eq!(a[3], b[3]);
        assert_eq!(b[4], a[4] + 1);
        assert!(b > a);
        assert!(g.pieces.iter().any(|p| matches!(p, TilePiece::Gadget { h: 2, .. })));
    }

    #[test]
    fn no_lower_gadget_means_no_form_from_qh() {
        let p = pa(2, 2, 1);
        let f = factor(Graph::complete(6), p, vec![cl(&[0]), cl(&[1, 2]), cl(&[3, 4, 5])]);
        assert!(f.move_form_qj(true).is_none());
    }

    #[test]
    fn break_gadget_inventory() {
        let p = pa(2, 2, 1);
        let gad = build_q(&p, 1).unwrap();
        let host = Graph::complete(11);
        let f = factor(host, p, vec![TilePiece::Gadget { h: 1, l: gad.l_sets, m: gad.m_sets, n: gad.n_sets }, cl(&[10])]);
        let rw = f.move_break_gadget().unwrap();
        let mut g = f.clone();
        g.apply(&rw);
        g.validate().unwrap();
        assert!(g.compute_index() > f.compute_index());
        // x joins the single L-vertex: K_2, three K_3 from the pairs
        let mut sizes: Vec<usize> = g.pieces.iter().map(|p| p.vertices().len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3, 3, 3]);
    }

    #[test]
    fn break_gadget_needs_full_join() {
        let p = pa(2, 2, 1);
        let gad = build_q(&p, 1).unwrap();
        let mut host = Graph::empty(11);
        for (u, v) in gad.graph.edges() {
            host.add_edge(u, v).unwrap();
        }
        // x = 10 sees only M-vertices
        for &v in gad.m_sets.iter().flatten() {
            host.add_edge(v, 10).unwrap();
        }
        let f = factor(host, p, vec![TilePiece::Gadget { h: 1, l: gad.l_sets, m: gad.m_sets, n: gad.n_sets }, cl(&[10])]);
        assert!(f.move_break_gadget().is_none());
    }

    #[test]
    fn matching_swap_fixture() {
        // m=1, s=2, t=1 (r=3): Q_1 has x=1 L-vertex, y=1 pair (M: K_1, N: K_1).
        // Two gadgets {l, m, n}; free K_1's x1, x2 replace the L-vertices y1, y2 which are adjacent.
        let p = pa(1, 2, 1);
        // vertices: g1 = (0 L, 1 M, 2 N), g2 = (3 L, 4 M, 5 N), x1 = 6, x2 = 7
        let mut host = Graph::empty(8);
        for (u, v) in [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (6, 1), (7, 4)] {
            host.add_edge(u, v).unwrap();
        }
        let gd = |l, m, n| TilePiece::Gadget { h: 1, l: vec![vec![l]], m: vec![vec![m]], n: vec![vec![n]] };
        let mut f = factor(host.clone(), p, vec![gd(0, 1, 2), gd(3, 4, 5), cl(&[6]), cl(&[7])]);
        // H-degree of y must exceed j = 1: give each y a second H-neighbour via more K_1's
        assert!(f.move_matching_swap().is_none());
        host.add_edge(6, 4).unwrap();
        host.add_edge(7, 1).unwrap();
        f.host = host;
        let rw = f.move_matching_swap().unwrap();
        let mut g = f.clone();
        g.apply(&rw);
        g.validate().unwrap();
        assert!(g.pieces.contains(&cl(&[0, 3])));
        assert!(g.compute_index() > f.compute_index());
        let empty = factor(Graph::complete(3), p, vec![cl(&[0]), cl(&[1]), cl(&[2])]);
        assert!(empty.move_matching_swap().is_none());
    }

    #[test]
    fn local_search_examples() {
        let p = pa(2, 2, 1);
        let out = run_local_search(&Graph::complete(3), &p, &SearchConfig::default()).unwrap();
        assert_eq!(out.factor.compute_index(), vec![1, 0, 0, 0, 0]);
        assert!(out.trace.iter().all(|m| m.kind == MoveKind::ShiftVertex));
        let out = run_local_search(&Graph::empty(5), &p, &SearchConfig::default()).unwrap();
        assert_eq!(out.factor.compute_index(), vec![0, 0, 0, 5, 0]);
        assert!(out.trace.is_empty());
        let c5 = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let out = run_local_search(&c5, &p, &SearchConfig::default()).unwrap();
        assert!(out.factor.pieces.iter().all(|p| p.vertices().len() <= 2));
    }

    #[test]
    fn step_limit_is_flagged() {
        let cfg = SearchConfig { step_limit: 1, ..SearchConfig::default() };
        let out = run_local_search(&Graph::complete(6), &pa(2, 2, 1), &cfg).unwrap();
        assert!(out.step_limit_hit);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn trace_is_strictly_increasing_on_random_hosts() {
        for seed in 0..30 {
            let g = gen_gnp(24, Probability::parse("0.6").unwrap(), &Seed::new(seed));
            for p in [pa(2, 2, 1), pa(2, 2, 0), pa(3, 2, 1)] {
                let out = run_local_search(&g, &p, &SearchConfig::default()).unwrap();
                out.factor.validate().unwrap();
                for w in out.trace.windows(2) {
                    assert_eq!(w[0].index_after, w[1].index_before);
                }
                assert!(out.trace.iter().all(|m| m.index_after > m.index_before));
                assert!(out.trace.len() <= (2 * p.m + 1) * 24 * 24);
                out.factor.packing_certificate().unwrap().verify(PackingMode::Packing).unwrap();
            }
        }
    }

    #[test]
    fn dichotomy_examples() {
        let p = pa(2, 2, 1);
        let host = gen_extremal_host(20, &q(3, 5)).unwrap();
        let out = run_dichotomy(&host, &p, &DichotomyConfig::default()).unwrap();
        match &out.result {
            Dichotomy::Cover { leftover } => assert!(leftover.len() <= default_c_cap(20, 5)),
            Dichotomy::IndependentSet { set, .. } | Dichotomy::Inconclusive { set, .. } => assert!(host.is_independent(set).unwrap()),
        }
        let k10 = run_dichotomy(&Graph::complete(10), &RParams::variant_a(1, 3, 2).unwrap(), &DichotomyConfig::default()).unwrap();
        assert!(matches!(k10.result, Dichotomy::Cover { .. }));
        let e = run_dichotomy(&Graph::empty(30), &p, &DichotomyConfig::default()).unwrap();
        let Dichotomy::IndependentSet { set, .. } = e.result else { panic!("expected independent set") };
        assert_eq!(set.len(), 30);
        let half = gen_extremal_host(30, &q(1, 2)).unwrap();
        let sparse = graph_union(&half, &Graph::empty(30)).unwrap();
        let out = run_dichotomy(&sparse, &p, &DichotomyConfig::default()).unwrap();
        if let Dichotomy::IndependentSet { set, .. } = &out.result {
            assert!(sparse.is_independent(set).unwrap());
        }
    }
}
