//! Gadget graphs `Q_h`, the weighted clique `T`, packing certificates and the
//! critical chromatic number. All weights are exact rationals.

use crate::error::{param, Error, Result};
use crate::graph::{gen_complete_multipartite, Graph, GraphJson};
use crate::params::{RParams, Variant};
use crate::ratio::{format_rational, parse_rational, qi, Q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    pub graph: Graph,
    pub weights: Vec<Q>,
}

impl WeightedGraph {
    pub fn new(graph: Graph, weights: Vec<Q>) -> Result<Self> {
        if weights.len() != graph.n() {
            return param(format!("{} weights for {} vertices", weights.len(), graph.n()));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return param("weights must be nonnegative");
        }
        Ok(WeightedGraph { graph, weights })
    }

    /// `φ ⋉ self`.
    pub fn scale(&self, phi: &Q) -> Result<Self> {
        if !phi.is_positive() {
            return param(format!("scale factor {} must be positive", format_rational(phi)));
        }
        Ok(WeightedGraph { graph: self.graph.clone(), weights: self.weights.iter().map(|w| w * phi).collect() })
    }

    pub fn total_weight(&self) -> Q {
        self.weights.iter().fold(Q::zero(), |a, w| a + w)
    }
}

/// The gadget `Q_h`. Labels: L-sets first, then M-sets, then N-sets, each set contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QGadget {
    pub params: RParams,
    pub h: usize,
    pub l_sets: Vec<Vec<usize>>,
    pub m_sets: Vec<Vec<usize>>,
    pub n_sets: Vec<Vec<usize>>,
    pub graph: Graph,
}

/// `(x, y) = (s - t, (m - h)s + t)`: numbers of L-sets and of M/N pairs.
pub fn gadget_counts(p: &RParams, h: usize) -> (usize, usize) {
    (p.s - p.t, (p.m - h) * p.s + p.t)
}

fn check_h(p: &RParams, h: usize) -> Result<()> {
    p.require(Variant::A)?;
    if h == 0 || h > p.m {
        return param(format!("h={h} outside 1..={}", p.m));
    }
    Ok(())
}

pub fn build_q(p: &RParams, h: usize) -> Result<QGadget> {
    check_h(p, h)?;
    let (x, y) = gadget_counts(p, h);
    let msz = p.m - h + 1;
    let mut next = 0;
    let mut take = |k: usize| {
        let v: Vec<usize> = (next..next + k).collect();
        next += k;
        v
    };
    let l_sets: Vec<_> = (0..x).map(|_| take(h)).collect();
    let m_sets: Vec<_> = (0..y).map(|_| take(msz)).collect();
    let n_sets: Vec<_> = (0..y).map(|_| take(h)).collect();
    let mut g = Graph::empty(next);
    let clique = |g: &mut Graph, set: &[usize]| {
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                g.add_edge_unchecked(u, v);
            }
        }
    };
    let join = |g: &mut Graph, a: &[usize], b: &[usize]| {
        for &u in a {
            for &v in b {
                g.add_edge_unchecked(u, v);
            }
        }
    };
    for s in l_sets.iter().chain(&m_sets).chain(&n_sets) {
        clique(&mut g, s);
    }
    for l in &l_sets {
        for mset in &m_sets {
            join(&mut g, l, mset);
        }
    }
    for (mset, nset) in m_sets.iter().zip(&n_sets) {
        join(&mut g, mset, nset);
    }
    debug_assert_eq!(g.n(), (p.m + 1 - h) * p.r);
    Ok(QGadget { params: *p, h, l_sets, m_sets, n_sets, graph: g })
}

/// `K_{m+1}` with `σ_1..σ_m` (labels `0..m`) of weight `s/r` and `τ` (label `m`) of weight `t/r`.
pub fn build_t(p: &RParams) -> Result<WeightedGraph> {
    p.require(Variant::A)?;
    let r = p.r as i64;
    let mut w = vec![Q::new(BigInt::from(p.s), BigInt::from(r)); p.m];
    w.push(Q::new(BigInt::from(p.t), BigInt::from(r)));
    WeightedGraph::new(Graph::complete(p.m + 1), w)
}

/// `r / (s (m-h+1) x y)`, or `1` for the degenerate `t = 0, h = m` gadget.
pub fn q_h_constant(p: &RParams, h: usize) -> Result<Q> {
    check_h(p, h)?;
    let (x, y) = gadget_counts(p, h);
    if y == 0 {
        return Ok(Q::one());
    }
    Ok(Q::new(BigInt::from(p.r), BigInt::from(p.s * (p.m - h + 1) * x * y)))
}

/// LCM of the denominators of `q_1..q_m`.
pub fn common_denominator_b(p: &RParams) -> Result<BigInt> {
    p.require(Variant::A)?;
    let mut b = BigInt::one();
    for h in 1..=p.m {
        b = b.lcm(q_h_constant(p, h)?.denom());
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub piece: usize,
    pub map: Vec<usize>,
}

/// A list of weighted pieces and their embeddings into a host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingCert {
    pub host: Graph,
    pub pieces: Vec<WeightedGraph>,
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackingMode {
    Packing,
    Factor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnknownPiece { placement: usize, piece: usize },
    MapLength { placement: usize, expected: usize, got: usize },
    OutOfRange { placement: usize, vertex: usize },
    NotInjective { placement: usize, vertex: usize },
    MissingEdge { placement: usize, u: usize, v: usize },
    Overweight { vertex: usize, weight: String },
    Underweight { vertex: usize, weight: String },
}

impl PackingCert {
    /// Total weight landing on each host vertex.
    pub fn accumulated(&self) -> Vec<Q> {
        let mut acc = vec![Q::zero(); self.host.n()];
        for pl in &self.placements {
            if let Some(piece) = self.pieces.get(pl.piece) {
                for (i, &v) in pl.map.iter().enumerate() {
                    if v < acc.len() && i < piece.weights.len() {
                        acc[v] += &piece.weights[i];
                    }
                }
            }
        }
        acc
    }

    pub fn residue(&self) -> Q {
        self.accumulated().iter().fold(Q::zero(), |a, w| a + (Q::one() - w))
    }

    /// Checks every placement, then the weight bound at every vertex.
    ///
    /// Piece vertices of weight zero carry nothing and are exempt from the
    /// injectivity and edge checks; their image only has to be a host vertex.
    pub fn verify(&self, mode: PackingMode) -> std::result::Result<(), Violation> {
        let n = self.host.n();
        for (pi, pl) in self.placements.iter().enumerate() {
            let piece = self.pieces.get(pl.piece).ok_or(Violation::UnknownPiece { placement: pi, piece: pl.piece })?;
            if pl.map.len() != piece.graph.n() {
                return Err(Violation::MapLength { placement: pi, expected: piece.graph.n(), got: pl.map.len() });
            }
            if let Some(&v) = pl.map.iter().find(|&&v| v >= n) {
                return Err(Violation::OutOfRange { placement: pi, vertex: v });
            }
            let live: Vec<usize> = (0..pl.map.len()).filter(|&i| !piece.weights[i].is_zero()).collect();
            let mut seen = vec![false; n];
            for &i in &live {
                let v = pl.map[i];
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Violation::NotInjective { placement: pi, vertex: v });
                }
            }
            for (a, &i) in live.iter().enumerate() {
                for &j in &live[a + 1..] {
                    if piece.graph.has_edge(i, j) && !self.host.has_edge(pl.map[i], pl.map[j]) {
                        let (u, v) = (pl.map[i].min(pl.map[j]), pl.map[i].max(pl.map[j]));
                        return Err(Violation::MissingEdge { placement: pi, u, v });
                    }
                }
            }
        }
        for (v, w) in self.accumulated().iter().enumerate() {
            if w > &Q::one() {
                return Err(Violation::Overweight { vertex: v, weight: format_rational(w) });
            }
            if mode == PackingMode::Factor && w < &Q::one() {
                return Err(Violation::Underweight { vertex: v, weight: format_rational(w) });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> PackingCertJson {
        PackingCertJson {
            host: self.host.to_json(),
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceJson { graph: p.graph.to_json(), weights: p.weights.iter().map(format_rational).collect() })
                .collect(),
            placements: self.placements.iter().map(|p| PlacementJson { piece: p.piece, map: p.map.clone() }).collect(),
            accumulated: Some(self.accumulated().iter().map(format_rational).collect()),
        }
    }

    pub fn from_json(j: &PackingCertJson) -> Result<Self> {
        let host = Graph::from_json(&j.host)?;
        let mut pieces = Vec::with_capacity(j.pieces.len());
        for p in &j.pieces {
            let w = p.weights.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            pieces.push(WeightedGraph::new(Graph::from_json(&p.graph)?, w)?);
        }
        let placements = j.placements.iter().map(|p| Placement { piece: p.piece, map: p.map.clone() }).collect();
        Ok(PackingCert { host, pieces, placements })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceJson {
    pub graph: GraphJson,
    pub weights: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementJson {
    pub piece: usize,
    pub map: Vec<usize>,
}

/// Serialized certificate; `accumulated` is informational and ignored on read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingCertJson {
    pub host: GraphJson,
    pub pieces: Vec<PieceJson>,
    pub placements: Vec<PlacementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accumulated: Option<Vec<String>>,
}

/// `m+1` copies of `T` in `K_{m+1}`, copy `i` sending `τ` to vertex `i`.
pub fn t_factor_of_clique(p: &RParams) -> Result<PackingCert> {
    let t = build_t(p)?;
    let k = p.m + 1;
    let placements = (0..k)
        .map(|i| {
            let mut map: Vec<usize> = (0..k).filter(|&v| v != i).collect();
            map.push(i);
            Placement { piece: 0, map }
        })
        .collect();
    Ok(PackingCert { host: Graph::complete(k), pieces: vec![t], placements })
}

/// A `{q_h ⋉ T}`-factor of `Q_h`.
///
/// Pieces: `x q_h ⋉ T` (index 0) and `y q_h ⋉ T` (index 1). For every L-set `L_a` and
/// pair `(M_b, N_b)` the subgraph on `L_a ∪ M_b ∪ N_b` gets, for each vertex `μ` of `M_b`,
/// one copy of the first piece on `L_a` plus `M_b` with `τ ↦ μ`, and one copy of the
/// second piece on `N_b` plus `M_b` with `τ ↦ μ`.
pub fn factor_q_with_t(p: &RParams, h: usize) -> Result<PackingCert> {
    let gad = build_q(p, h)?;
    let t = build_t(p)?;
    let q = q_h_constant(p, h)?;
    let (x, y) = gadget_counts(p, h);
    if y == 0 {
        // s disjoint K_m, each taking m rotated copies of T; τ has weight zero
        // and is parked on the first vertex.
        let mut placements = Vec::with_capacity(p.s * p.m);
        for l in &gad.l_sets {
            for rot in 0..p.m {
                let mut map: Vec<usize> = (0..p.m).map(|j| l[(rot + j) % p.m]).collect();
                map.push(gad.l_sets[0][0]);
                placements.push(Placement { piece: 0, map });
            }
        }
        return Ok(PackingCert { host: gad.graph, pieces: vec![t.scale(&q)?], placements });
    }
    let p1 = t.scale(&(&q * qi(x as i64)))?;
    let p2 = t.scale(&(&q * qi(y as i64)))?;
    let mut placements = Vec::with_capacity(2 * x * y * (p.m - h + 1));
    for l in &gad.l_sets {
        for (mset, nset) in gad.m_sets.iter().zip(&gad.n_sets) {
            for (i, &mu) in mset.iter().enumerate() {
                let others: Vec<usize> = mset.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                for (piece, side) in [(0, l), (1, nset)] {
                    let mut map: Vec<usize> = side.iter().chain(&others).copied().collect();
                    map.push(mu);
                    placements.push(Placement { piece, map });
                }
            }
        }
    }
    Ok(PackingCert { host: gad.graph, pieces: vec![p1, p2], placements })
}

/// A gadget copy inside some host: `h = None` is `K_{m+1}`, otherwise `Q_h`.
/// `map[i]` is the host image of gadget label `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedGadget {
    pub h: Option<usize>,
    pub map: Vec<usize>,
}

/// A `{(1/b) ⋉ T}`-packing of `host` covering exactly the given disjoint gadget copies.
pub fn assemble_b_packing(p: &RParams, host: &Graph, gadgets: &[PlacedGadget]) -> Result<PackingCert> {
    let b = common_denominator_b(p)?;
    let unit = build_t(p)?.scale(&Q::new(BigInt::one(), b))?;
    let mut placements = Vec::new();
    for gd in gadgets {
        let cert = match gd.h {
            None => t_factor_of_clique(p)?,
            Some(h) => factor_q_with_t(p, h)?,
        };
        if gd.map.len() != cert.host.n() {
            return param(format!("gadget map has {} entries, gadget has {} vertices", gd.map.len(), cert.host.n()));
        }
        for pl in &cert.placements {
            // ratio of this piece to the unit piece, read off σ_1
            let mult = &cert.pieces[pl.piece].weights[0] / &unit.weights[0];
            let copies = mult.to_integer().to_usize().ok_or_else(|| Error::Validation("multiplicity overflow".into()))?;
            if Q::from_integer(BigInt::from(copies)) != mult {
                return Err(Error::Validation("weight is not a multiple of 1/b".into()));
            }
            let map: Vec<usize> = pl.map.iter().map(|&v| gd.map[v]).collect();
            placements.extend(std::iter::repeat_n(Placement { piece: 0, map }, copies));
        }
    }
    Ok(PackingCert { host: host.clone(), pieces: vec![unit], placements })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalChromatic {
    pub chi: usize,
    pub t_min: usize,
    #[serde(serialize_with = "ser_q")]
    pub s_value: Q,
    #[serde(serialize_with = "ser_q")]
    pub chi_cr: Q,
}

pub(crate) fn ser_q<S: serde::Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(v))
}

/// Exact colouring cap; saturation masks are 64-bit.
pub const CRITICAL_CHROMATIC_LIMIT: usize = 32;

fn colourable(g: &Graph, active: &[usize], k: usize) -> bool {
    // DSATUR branching; colours are introduced in order to break symmetry.
    fn rec(g: &Graph, active: &[usize], colour: &mut [usize], sat: &mut [u64], left: usize, k: usize, used: usize) -> bool {
        if left == 0 {
            return true;
        }
        let mut best = usize::MAX;
        let mut key = (0, 0);
        for &v in active {
            if colour[v] == usize::MAX {
                let kv = (sat[v].count_ones(), g.degree(v));
                if best == usize::MAX || kv > key {
                    best = v;
                    key = kv;
                }
            }
        }
        let v = best;
        for c in 0..k.min(used + 1) {
            if sat[v] >> c & 1 == 1 {
                continue;
            }
            colour[v] = c;
            let saved: Vec<(usize, u64)> = g.adj(v).ones().map(|u| (u, sat[u])).collect();
            for &(u, _) in &saved {
                sat[u] |= 1 << c;
            }
            if rec(g, active, colour, sat, left - 1, k, used.max(c + 1)) {
                return true;
            }
            for (u, old) in saved {
                sat[u] = old;
            }
            colour[v] = usize::MAX;
        }
        false
    }
    let mut colour = vec![usize::MAX; g.n()];
    let mut mask = vec![false; g.n()];
    for &v in active {
        mask[v] = true;
    }
    for v in 0..g.n() {
        if !mask[v] {
            colour[v] = usize::MAX - 1;
        }
    }
    let mut sat = vec![0u64; g.n()];
    rec(g, active, &mut colour, &mut sat, active.len(), k, 0)
}

pub fn chromatic_number(g: &Graph) -> Result<usize> {
    if g.n() > CRITICAL_CHROMATIC_LIMIT {
        return Err(Error::Size { what: "vertices for exact colouring".into(), got: g.n(), limit: CRITICAL_CHROMATIC_LIMIT });
    }
    let all: Vec<usize> = (0..g.n()).collect();
    Ok((0..=g.n()).find(|&k| colourable(g, &all, k)).unwrap_or(g.n()))
}

/// `χ`, the smallest colour class over all `χ`-colourings, `s = (|V| - t_min)/(χ - 1)`
/// and `χ_cr = |V|/s`. An edgeless graph gets `s = |V|` and `χ_cr = 1`.
pub fn critical_chromatic(g: &Graph) -> Result<CriticalChromatic> {
    let n = g.n();
    if n == 0 {
        return param("graph must be nonempty");
    }
    let chi = chromatic_number(g)?;
    let nq = qi(n as i64);
    if chi == 1 {
        return Ok(CriticalChromatic { chi, t_min: n, s_value: nq.clone(), chi_cr: Q::one() });
    }
    // Smallest independent I with χ(G - I) ≤ χ - 1.
    fn search(g: &Graph, k: usize, start: usize, cur: &mut Vec<usize>, chi: usize) -> bool {
        if cur.len() == k {
            let rest: Vec<usize> = (0..g.n()).filter(|v| !cur.contains(v)).collect();
            return colourable(g, &rest, chi - 1);
        }
        for v in start..g.n() {
            if cur.iter().all(|&u| !g.has_edge(u, v)) {
                cur.push(v);
                if search(g, k, v + 1, cur, chi) {
                    return true;
                }
                cur.pop();
            }
        }
        false
    }
    let t_min = (1..=n).find(|&k| search(g, k, 0, &mut Vec::new(), chi)).expect("a colour class works");
    let s_value = Q::new(BigInt::from(n - t_min), BigInt::from(chi - 1));
    let chi_cr = &nq / &s_value;
    Ok(CriticalChromatic { chi, t_min, s_value, chi_cr })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bottle {
    pub graph: Graph,
    pub class_sizes: Vec<usize>,
    pub dropped_empty_class: bool,
}

/// Complete `(m+1)`-partite graph with `m` classes of size `ms` and one of size `mt`.
pub fn gen_bottle(m: usize, r: usize, t: usize) -> Result<Bottle> {
    if m == 0 || r <= t || (r - t) % m != 0 {
        return param(format!("r={r}, t={t} is not m·s + t for m={m}"));
    }
    let s = (r - t) / m;
    if t >= s {
        return param(format!("need t < s, got t={t}, s={s}"));
    }
    let mut sizes = vec![m * s; m];
    let dropped = t == 0;
    if !dropped {
        sizes.push(m * t);
    }
    Ok(Bottle { graph: gen_complete_multipartite(&sizes)?, class_sizes: sizes, dropped_empty_class: dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::q;

    fn pa(m: usize, s: usize, t: usize) -> RParams {
        RParams::variant_a(m, s, t).unwrap()
    }

    #[test]
    fn build_q_examples() {
        let g = build_q(&pa(2, 2, 1), 1).unwrap();
        assert_eq!(g.graph.n(), 10);
        assert_eq!((g.l_sets.len(), g.m_sets.len(), g.n_sets.len()), (1, 3, 3));
        assert!(g.m_sets.iter().all(|s| s.len() == 2));
        let g = build_q(&pa(2, 2, 0), 2).unwrap();
        assert_eq!(g.graph.n(), 4);
        assert_eq!(g.graph.edges(), vec![(0, 1), (2, 3)]);
        assert_eq!(build_q(&pa(3, 3, 1), 2).unwrap().graph.n(), 20);
        assert!(build_q(&RParams::variant_b(2, 2, 2).unwrap(), 1).is_err());
        assert!(build_q(&pa(2, 2, 1), 3).is_err());
    }

    #[test]
    fn gadget_adjacency_pattern() {
        let g = build_q(&pa(3, 2, 1), 2).unwrap();
        let gr = &g.graph;
        for l in &g.l_sets {
            for n in &g.n_sets {
                assert!(l.iter().all(|&a| n.iter().all(|&b| !gr.has_edge(a, b))));
            }
        }
        for (j, m) in g.m_sets.iter().enumerate() {
            for (k, n) in g.n_sets.iter().enumerate() {
                let all = m.iter().all(|&a| n.iter().all(|&b| gr.has_edge(a, b)));
                let none = m.iter().all(|&a| n.iter().all(|&b| !gr.has_edge(a, b)));
                assert!(if j == k { all } else { none });
            }
        }
    }

    #[test]
    fn t_examples() {
        let t = build_t(&pa(2, 2, 1)).unwrap();
        assert_eq!(t.weights, vec![q(2, 5), q(2, 5), q(1, 5)]);
        let t0 = build_t(&pa(2, 2, 0)).unwrap();
        assert_eq!(t0.weights, vec![q(1, 2), q(1, 2), Q::zero()]);
        assert_eq!(t.total_weight(), Q::one());
    }

    #[test]
    fn scale_examples() {
        let t = build_t(&pa(2, 2, 1)).unwrap();
        assert_eq!(t.scale(&Q::one()).unwrap(), t);
        assert_eq!(t.scale(&q(1, 2)).unwrap().scale(&qi(2)).unwrap(), t);
        assert_eq!(t.scale(&q(5, 12)).unwrap().weights, vec![q(1, 6), q(1, 6), q(1, 12)]);
        assert!(t.scale(&Q::zero()).is_err());
    }

    #[test]
    fn q_constants_and_b() {
        assert_eq!(q_h_constant(&pa(2, 2, 1), 1).unwrap(), q(5, 12));
        assert_eq!(q_h_constant(&pa(2, 2, 1), 2).unwrap(), q(5, 2));
        assert_eq!(q_h_constant(&pa(2, 2, 0), 2).unwrap(), Q::one());
        assert_eq!(common_denominator_b(&pa(2, 2, 1)).unwrap(), BigInt::from(12));
        assert_eq!(common_denominator_b(&pa(1, 2, 1)).unwrap(), BigInt::from(2));
        assert_eq!(common_denominator_b(&pa(2, 2, 0)).unwrap(), BigInt::from(4));
    }

    #[test]
    fn factor_weights_inside_f() {
        let p = pa(2, 2, 1);
        let cert = factor_q_with_t(&p, 1).unwrap();
        let gad = build_q(&p, 1).unwrap();
        // contribution of a single F-copy (L_1, M_1 ∪ N_1)
        let mut acc = vec![Q::zero(); gad.graph.n()];
        let f_vertices: Vec<usize> = gad.l_sets[0].iter().chain(&gad.m_sets[0]).chain(&gad.n_sets[0]).copied().collect();
        for pl in &cert.placements {
            if pl.map.iter().all(|v| f_vertices.contains(v)) {
                for (i, &v) in pl.map.iter().enumerate() {
                    acc[v] += &cert.pieces[pl.piece].weights[i];
                }
            }
        }
        assert_eq!(acc[gad.l_sets[0][0]], q(1, 3));
        assert_eq!(acc[gad.m_sets[0][0]], Q::one());
        assert_eq!(acc[gad.n_sets[0][0]], Q::one());
        assert_eq!(cert.verify(PackingMode::Factor), Ok(()));
    }

    #[test]
    fn degenerate_factor() {
        let cert = factor_q_with_t(&pa(2, 2, 0), 2).unwrap();
        assert_eq!(cert.verify(PackingMode::Factor), Ok(()));
        assert_eq!(cert.residue(), Q::zero());
        assert_eq!(factor_q_with_t(&pa(3, 3, 2), 1).unwrap().verify(PackingMode::Factor), Ok(()));
    }

    #[test]
    fn clique_factor_and_perturbation() {
        let mut cert = t_factor_of_clique(&pa(2, 2, 1)).unwrap();
        assert_eq!(cert.verify(PackingMode::Factor), Ok(()));
        assert_eq!(cert.residue(), Q::zero());
        let taus: Vec<usize> = cert.placements.iter().map(|p| *p.map.last().unwrap()).collect();
        assert_eq!(taus, vec![0, 1, 2]);
        cert.pieces[0].weights[0] = q(2, 5) + q(1, 1000);
        assert!(matches!(cert.verify(PackingMode::Packing), Err(Violation::Overweight { .. })));
    }

    #[test]
    fn overweight_is_reported() {
        let half = WeightedGraph::new(Graph::complete(2), vec![q(7, 12), q(1, 2)]).unwrap();
        let cert = PackingCert {
            host: Graph::complete(2),
            pieces: vec![half],
            placements: vec![Placement { piece: 0, map: vec![0, 1] }, Placement { piece: 0, map: vec![0, 1] }],
        };
        assert_eq!(cert.verify(PackingMode::Packing), Err(Violation::Overweight { vertex: 0, weight: "7/6".into() }));
    }

    #[test]
    fn structural_violations() {
        let t = build_t(&pa(1, 2, 1)).unwrap();
        let host = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let bad_edge = PackingCert { host: host.clone(), pieces: vec![t.clone()], placements: vec![Placement { piece: 0, map: vec![0, 2] }] };
        assert_eq!(bad_edge.verify(PackingMode::Packing), Err(Violation::MissingEdge { placement: 0, u: 0, v: 2 }));
        let clash = PackingCert { host, pieces: vec![t], placements: vec![Placement { piece: 0, map: vec![1, 1] }] };
        assert_eq!(clash.verify(PackingMode::Packing), Err(Violation::NotInjective { placement: 0, vertex: 1 }));
    }

    #[test]
    fn json_round_trip() {
        let cert = factor_q_with_t(&pa(2, 2, 1), 1).unwrap();
        let text = serde_json::to_string(&cert.to_json()).unwrap();
        let back = PackingCert::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn b_packing_of_mixed_collection() {
        let p = pa(2, 2, 1);
        // K_3 on 0..3 and Q_1 on 3..13
        let q1 = build_q(&p, 1).unwrap();
        let mut host = Graph::empty(13);
        for (u, v) in [(0, 1), (0, 2), (1, 2)] {
            host.add_edge(u, v).unwrap();
        }
        for (u, v) in q1.graph.edges() {
            host.add_edge(u + 3, v + 3).unwrap();
        }
        let gadgets = vec![
            PlacedGadget { h: None, map: vec![0, 1, 2] },
            PlacedGadget { h: Some(1), map: (3..13).collect() },
        ];
        let cert = assemble_b_packing(&p, &host, &gadgets).unwrap();
        assert_eq!(cert.pieces[0].weights[0], q(2, 60));
        assert_eq!(cert.verify(PackingMode::Factor), Ok(()));
    }

    #[test]
    fn critical_chromatic_examples() {
        let k3 = critical_chromatic(&Graph::complete(3)).unwrap();
        assert_eq!((k3.chi, k3.t_min, k3.s_value.clone(), k3.chi_cr.clone()), (3, 1, Q::one(), qi(3)));
        let k2 = critical_chromatic(&Graph::complete(2)).unwrap();
        assert_eq!((k2.chi, k2.t_min, k2.chi_cr), (2, 1, qi(2)));
        let b = critical_chromatic(&gen_complete_multipartite(&[4, 4, 2]).unwrap()).unwrap();
        assert_eq!((b.chi, b.t_min, b.s_value, b.chi_cr), (3, 2, qi(4), q(5, 2)));
        assert!(critical_chromatic(&Graph::empty(33)).is_err());
    }

    #[test]
    fn bottle_examples() {
        let b = gen_bottle(2, 5, 1).unwrap();
        assert_eq!(b.class_sizes, vec![4, 4, 2]);
        let b0 = gen_bottle(2, 4, 0).unwrap();
        assert!(b0.dropped_empty_class);
        assert_eq!(b0.graph, gen_complete_multipartite(&[4, 4]).unwrap());
        let c = critical_chromatic(&gen_bottle(3, 10, 1).unwrap().graph).unwrap();
        assert_eq!(c.chi_cr, q(10, 3));
        assert!(gen_bottle(2, 5, 2).is_err());
    }
}
