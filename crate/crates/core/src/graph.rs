//! Simple undirected graphs over `0..n` with packed-bitset adjacency.

use crate::error::{param, Error, Result};
use crate::ratio::{format_rational, Probability, Q};
use crate::rng::Seed;
use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Bits = FixedBitSet;

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Bits>,
    m: usize,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges())
    }
}

/// Sorts and deduplicates a vertex list, rejecting labels ≥ n.
pub fn canonical(n: usize, set: &[usize]) -> Result<Vec<usize>> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    if let Some(&x) = v.last() {
        if x >= n {
            return param(format!("vertex {x} out of range for n={n}"));
        }
    }
    Ok(v)
}

pub fn bits_of(n: usize, set: &[usize]) -> Bits {
    let mut b = Bits::with_capacity(n);
    for &v in set {
        b.insert(v);
    }
    b
}

pub fn full_bits(n: usize) -> Bits {
    let mut b = Bits::with_capacity(n);
    b.insert_range(..);
    b
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { n, adj: vec![Bits::with_capacity(n); n], m: 0 }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge_unchecked(u, v);
            }
        }
        g
    }

    /// Builds a graph, rejecting self-loops, duplicates and out-of-range labels.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Format(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::Format(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if g.has_edge(u, v) {
                return Err(Error::Format(format!("duplicate edge ({u},{v})")));
            }
            g.add_edge_unchecked(u, v);
        }
        Ok(g)
    }

    pub(crate) fn add_edge_unchecked(&mut self, u: usize, v: usize) {
        if !self.adj[u].contains(v) {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
            self.m += 1;
        }
    }

    /// Adds an edge; a no-op if present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v || u >= self.n || v >= self.n {
            return param(format!("invalid edge ({u},{v}) for n={}", self.n));
        }
        self.add_edge_unchecked(u, v);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    #[inline]
    pub fn adj(&self, v: usize) -> &Bits {
        &self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.adj[v].ones().collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones(..)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            for v in self.adj[u].ones().filter(|&v| v > u) {
                out.push((u, v));
            }
        }
        out
    }

    /// Vertices adjacent to every member of `set`; the whole vertex set for `∅`.
    pub fn common_neighborhood(&self, set: &[usize]) -> Result<Vec<usize>> {
        let set = canonical(self.n, set)?;
        Ok(self.common_bits(&set).ones().collect())
    }

    pub fn common_bits(&self, set: &[usize]) -> Bits {
        let mut b = full_bits(self.n);
        for &v in set {
            b.intersect_with(&self.adj[v]);
        }
        b
    }

    /// The subgraph induced on `set`, relabelled in sorted order; also returns the label map.
    pub fn induced_subgraph(&self, set: &[usize]) -> Result<(Graph, Vec<usize>)> {
        let set = canonical(self.n, set)?;
        let mut h = Graph::empty(set.len());
        for (i, &u) in set.iter().enumerate() {
            for (j, &v) in set.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    h.add_edge_unchecked(i, j);
                }
            }
        }
        Ok((h, set))
    }

    /// Number of ordered pairs `(x, y) ∈ X × Y` with `xy` an edge; edges inside `X ∩ Y` count twice.
    pub fn edge_count_between(&self, x: &[usize], y: &[usize]) -> Result<usize> {
        let x = canonical(self.n, x)?;
        let yb = bits_of(self.n, &canonical(self.n, y)?);
        Ok(x.iter().map(|&v| self.adj[v].intersection_count(&yb)).sum())
    }

    /// Edges with both ends in `set`.
    pub fn edges_within(&self, set: &[usize]) -> usize {
        let b = bits_of(self.n, set);
        set.iter().map(|&v| self.adj[v].intersection_count(&b)).sum::<usize>() / 2
    }

    pub fn is_independent(&self, set: &[usize]) -> Result<bool> {
        let set = canonical(self.n, set)?;
        let b = bits_of(self.n, &set);
        Ok(set.iter().all(|&v| self.adj[v].is_disjoint(&b)))
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &u)| set[i + 1..].iter().all(|&v| u != v && self.has_edge(u, v)))
    }

    /// All `k`-cliques inside `within` (default: every vertex) in lexicographic order,
    /// stopping after `limit` results when given.
    pub fn enumerate_cliques(&self, k: usize, within: Option<&[usize]>, limit: Option<usize>) -> Result<Vec<Vec<usize>>> {
        if k == 0 {
            return param("clique size must be at least 1");
        }
        let cand = match within {
            Some(w) => bits_of(self.n, &canonical(self.n, w)?),
            None => full_bits(self.n),
        };
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        self.clique_rec(k, &cand, &mut cur, &mut out, limit.unwrap_or(usize::MAX));
        Ok(out)
    }

    fn clique_rec(&self, k: usize, cand: &Bits, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        if cand.count_ones(..) < need {
            return;
        }
        for v in cand.ones() {
            let mut next = cand.clone();
            next.intersect_with(&self.adj[v]);
            next.remove_range(..v + 1);
            cur.push(v);
            self.clique_rec(k, &next, cur, out, limit);
            cur.pop();
            if out.len() >= limit {
                return;
            }
        }
    }

    /// First `k`-clique (lexicographically) inside `cand`, if any.
    pub fn find_clique_in_bits(&self, cand: &Bits, k: usize) -> Option<Vec<usize>> {
        if k == 0 {
            return Some(Vec::new());
        }
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        self.clique_rec(k, cand, &mut cur, &mut out, 1);
        out.pop()
    }

    /// Number of `k`-cliques in `cand`, counting stops once `cap` is reached.
    pub fn count_cliques_capped(&self, cand: &Bits, k: usize, cap: usize) -> usize {
        fn rec(g: &Graph, cand: &Bits, k: usize, cap: usize, acc: &mut usize) {
            if k == 0 {
                *acc += 1;
                return;
            }
            if k == 1 {
                *acc += cand.count_ones(..);
                return;
            }
            if k == 2 {
                for v in cand.ones() {
                    let c = g.adj[v].intersection(cand).filter(|&u| u > v).count();
                    *acc += c;
                    if *acc >= cap {
                        return;
                    }
                }
                return;
            }
            for v in cand.ones() {
                let mut next = cand.clone();
                next.intersect_with(&g.adj[v]);
                next.remove_range(..v + 1);
                if next.count_ones(..) >= k - 1 {
                    rec(g, &next, k - 1, cap, acc);
                }
                if *acc >= cap {
                    return;
                }
            }
        }
        let mut acc = 0;
        rec(self, cand, k, cap, &mut acc);
        acc.min(cap)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson { n: self.n, edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect() }
    }

    pub fn from_json(j: &GraphJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(j.edges.len());
        for &[u, v] in &j.edges {
            if u > v {
                return Err(Error::Format(format!("edge [{u},{v}] must be listed with u < v")));
            }
            edges.push((u, v));
        }
        Graph::from_edges(j.n, &edges)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let j: GraphJson = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Graph::from_json(&j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph serializes")
    }
}

/// Serialized graph: `{"n": int, "edges": [[u,v],...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

/// `G(n, p)`: pairs are visited in lexicographic order, one draw each.
pub fn gen_gnp(n: usize, p: Probability, seed: &Seed) -> Graph {
    let mut g = Graph::empty(n);
    if p.is_zero() {
        return g;
    }
    let mut rng = seed.rng();
    for u in 0..n {
        for v in u + 1..n {
            if p.sample(&mut rng) {
                g.add_edge_unchecked(u, v);
            }
        }
    }
    g
}

/// Independent set `A = {0, .., (1-α)n - 1}` joined completely to the rest, which is a clique.
pub fn gen_extremal_host(n: usize, alpha: &Q) -> Result<Graph> {
    let a = extremal_independent_size(n, alpha)?;
    let mut g = Graph::complete(n);
    for u in 0..a {
        for v in u + 1..a {
            g.adj[u].remove(v);
            g.adj[v].remove(u);
            g.m -= 1;
        }
    }
    Ok(g)
}

/// `(1-α)n`, the size of the independent side of the extremal host.
pub fn extremal_independent_size(n: usize, alpha: &Q) -> Result<usize> {
    if alpha <= &Q::zero() || alpha >= &Q::one() {
        return param(format!("alpha {} outside (0,1)", format_rational(alpha)));
    }
    let a = (Q::one() - alpha) * Q::from_integer(BigInt::from(n));
    if !a.is_integer() {
        return param(format!("(1-alpha)n = {} is not an integer", format_rational(&a)));
    }
    Ok(a.to_integer().to_usize().expect("fits"))
}

/// Classes are consecutive label ranges in the given order.
pub fn gen_complete_multipartite(class_sizes: &[usize]) -> Result<Graph> {
    if class_sizes.is_empty() {
        return param("no classes given");
    }
    if class_sizes.contains(&0) {
        return param("class sizes must be positive");
    }
    let n = class_sizes.iter().sum();
    let mut class = Vec::with_capacity(n);
    for (c, &k) in class_sizes.iter().enumerate() {
        class.extend(std::iter::repeat_n(c, k));
    }
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if class[u] != class[v] {
                g.add_edge_unchecked(u, v);
            }
        }
    }
    Ok(g)
}

pub fn graph_union(g1: &Graph, g2: &Graph) -> Result<Graph> {
    if g1.n != g2.n {
        return param(format!("vertex counts differ: {} vs {}", g1.n, g2.n));
    }
    let mut g = g1.clone();
    for (u, v) in g2.edges() {
        g.add_edge_unchecked(u, v);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{q, qi};
    use proptest::prelude::*;

    fn cycle(n: usize) -> Graph {
        let e: Vec<_> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    fn naive_cliques(g: &Graph, k: usize) -> usize {
        (0u32..1 << g.n())
            .filter(|m| m.count_ones() as usize == k)
            .filter(|m| {
                let s: Vec<usize> = (0..g.n()).filter(|&i| m >> i & 1 == 1).collect();
                g.is_clique(&s)
            })
            .count()
    }

    #[test]
    fn gnp_extremes() {
        let s = Seed::new(9);
        assert_eq!(gen_gnp(5, Probability::ZERO, &s).edge_count(), 0);
        assert_eq!(gen_gnp(5, Probability::ONE, &s).edge_count(), 10);
    }

    #[test]
    fn gnp_half_density() {
        let g = gen_gnp(1000, Probability::parse("0.5").unwrap(), &Seed::new(42));
        // C(1000,2)/2 = 249750, sd = sqrt(499500)/2 ≈ 353.4
        let dev = (g.edge_count() as f64 - 249750.0).abs();
        assert!(dev < 4.0 * 353.4, "edges = {}", g.edge_count());
    }

    #[test]
    fn gnp_is_deterministic() {
        let p = Probability::parse("3/10").unwrap();
        assert_eq!(gen_gnp(60, p, &Seed::new(5)), gen_gnp(60, p, &Seed::new(5)));
        assert_ne!(gen_gnp(60, p, &Seed::new(5)), gen_gnp(60, p, &Seed::new(6)));
    }

    #[test]
    fn extremal_host_structure() {
        let g = gen_extremal_host(10, &q(3, 5)).unwrap();
        assert!(g.is_independent(&[0, 1, 2, 3]).unwrap());
        assert_eq!(g.min_degree(), 6);
        for u in 0..10 {
            for v in u + 1..10 {
                assert_eq!(g.has_edge(u, v), v >= 4);
            }
        }
        assert_eq!(gen_extremal_host(10, &q(9, 10)).unwrap(), Graph::complete(10));
        assert!(gen_extremal_host(10, &q(1, 3)).is_err());
        assert!(gen_extremal_host(10, &qi(1)).is_err());
        let g = gen_extremal_host(12, &q(2, 3)).unwrap();
        assert_eq!(crate::mis::max_independent_set(&g).unwrap().len(), 4);
    }

    #[test]
    fn multipartite_examples() {
        assert_eq!(gen_complete_multipartite(&[2, 2]).unwrap().edge_count(), 4);
        let b = gen_complete_multipartite(&[4, 4, 2]).unwrap();
        assert_eq!((b.n(), b.edge_count()), (10, 32));
        assert_eq!(gen_complete_multipartite(&[1, 1, 1]).unwrap(), Graph::complete(3));
        assert!(gen_complete_multipartite(&[]).is_err());
        assert_eq!(b.enumerate_cliques(3, None, None).unwrap().len(), 32);
    }

    #[test]
    fn union_examples() {
        assert_eq!(graph_union(&Graph::empty(5), &Graph::complete(5)).unwrap(), Graph::complete(5));
        assert_eq!(graph_union(&cycle(4), &cycle(4)).unwrap(), cycle(4));
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let e = Graph::from_edges(3, &[(0, 2)]).unwrap();
        assert_eq!(graph_union(&p3, &e).unwrap(), Graph::complete(3));
        assert!(graph_union(&p3, &Graph::empty(4)).is_err());
    }

    #[test]
    fn query_examples() {
        let k4 = Graph::complete(4);
        assert_eq!(k4.edge_count_between(&[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap(), 12);
        assert_eq!(cycle(4).common_neighborhood(&[0, 2]).unwrap(), vec![1, 3]);
        assert!(cycle(4).is_independent(&[]).unwrap());
        assert!(k4.common_neighborhood(&[7]).is_err());
        let (h, map) = cycle(6).induced_subgraph(&[4, 0, 5]).unwrap();
        assert_eq!(map, vec![0, 4, 5]);
        assert_eq!(h.edge_count(), 2);
    }

    #[test]
    fn clique_examples() {
        assert!(cycle(6).enumerate_cliques(3, None, None).unwrap().is_empty());
        let t = Graph::complete(5).enumerate_cliques(3, None, None).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], vec![0, 1, 2]);
        assert_eq!(Graph::complete(5).enumerate_cliques(3, None, Some(4)).unwrap().len(), 4);
        assert_eq!(Graph::complete(6).enumerate_cliques(2, Some(&[1, 3, 5]), None).unwrap().len(), 3);
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let g = gen_complete_multipartite(&[2, 3]).unwrap();
        assert_eq!(Graph::parse_json(&g.to_json_string()).unwrap(), g);
        assert!(Graph::parse_json(r#"{"n":3,"edges":[[0,1],[0,1]]}"#).is_err());
        assert!(Graph::parse_json(r#"{"n":3,"edges":[[1,1]]}"#).is_err());
        assert!(Graph::parse_json(r#"{"n":3,"edges":[[2,0]]}"#).is_err());
        assert!(Graph::parse_json(r#"{"n":3,"edges":[[0,3]]}"#).is_err());
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let mut g = Graph::empty(n);
                let mut i = 0;
                for u in 0..n {
                    for v in u + 1..n {
                        if bits[i] {
                            g.add_edge_unchecked(u, v);
                        }
                        i += 1;
                    }
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn degree_split_identity(g in arb_graph(14), mask in any::<u32>(), ymask in any::<u32>()) {
            let n = g.n();
            let x: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let y: Vec<usize> = (0..n).filter(|&i| ymask >> i & 1 == 1).collect();
            let rest: Vec<usize> = (0..n).filter(|&i| ymask >> i & 1 == 0).collect();
            let lhs = g.edge_count_between(&x, &y).unwrap() + g.edge_count_between(&x, &rest).unwrap();
            let rhs: usize = x.iter().map(|&v| g.degree(v)).sum();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn cliques_match_naive(g in arb_graph(11), k in 1usize..5) {
            prop_assert_eq!(g.enumerate_cliques(k, None, None).unwrap().len(), naive_cliques(&g, k));
            let cap = naive_cliques(&g, k);
            prop_assert_eq!(g.count_cliques_capped(&full_bits(g.n()), k, usize::MAX), cap);
        }

        #[test]
        fn union_commutes(a in arb_graph(9), seed in any::<u64>()) {
            let b = gen_gnp(a.n(), Probability::parse("1/2").unwrap(), &Seed::new(seed));
            prop_assert_eq!(graph_union(&a, &b).unwrap(), graph_union(&b, &a).unwrap());
            prop_assert_eq!(graph_union(&a, &a).unwrap(), a);
        }
    }
}
