//! Independent sets: exact maximum search and a greedy builder.

use crate::error::{Error, Result};
use crate::graph::{bits_of, full_bits, Bits, Graph};

/// Largest vertex count accepted by [`max_independent_set`].
pub const EXACT_MIS_LIMIT: usize = 200;

/// A maximum independent set, found as a maximum clique of the complement with
/// greedy-colouring bounds.
pub fn max_independent_set(g: &Graph) -> Result<Vec<usize>> {
    max_independent_set_within(g, &(0..g.n()).collect::<Vec<_>>())
}

pub fn max_independent_set_within(g: &Graph, within: &[usize]) -> Result<Vec<usize>> {
    let n = g.n();
    if within.len() > EXACT_MIS_LIMIT {
        return Err(Error::Size { what: "vertices for exact MIS".into(), got: within.len(), limit: EXACT_MIS_LIMIT });
    }
    let all = full_bits(n);
    let comp: Vec<Bits> = (0..n)
        .map(|v| {
            let mut b = all.clone();
            b.difference_with(g.adj(v));
            b.remove(v);
            b
        })
        .collect();
    let mut best = Vec::new();
    let mut cur = Vec::new();
    expand(&comp, bits_of(n, within), &mut cur, &mut best);
    best.sort_unstable();
    Ok(best)
}

fn colour_order(comp: &[Bits], cand: &Bits) -> (Vec<usize>, Vec<usize>) {
    // Greedy colouring of the complement restricted to cand; returns vertices and bounds.
    let mut uncoloured = cand.clone();
    let mut order = Vec::new();
    let mut bounds = Vec::new();
    let mut colour = 0;
    while !uncoloured.is_clear() {
        colour += 1;
        let mut avail = uncoloured.clone();
        while let Some(v) = avail.minimum() {
            avail.remove(v);
            avail.difference_with(&comp[v]);
            uncoloured.remove(v);
            order.push(v);
            bounds.push(colour);
        }
    }
    (order, bounds)
}

fn expand(comp: &[Bits], mut cand: Bits, cur: &mut Vec<usize>, best: &mut Vec<usize>) {
    let (order, bounds) = colour_order(comp, &cand);
    for i in (0..order.len()).rev() {
        if cur.len() + bounds[i] <= best.len() {
            return;
        }
        let v = order[i];
        cur.push(v);
        let mut next = cand.clone();
        next.intersect_with(&comp[v]);
        if next.is_clear() {
            if cur.len() > best.len() {
                *best = cur.clone();
            }
        } else {
            expand(comp, next, cur, best);
        }
        cur.pop();
        cand.remove(v);
    }
}

/// Adds vertices of `order` greedily, skipping any with a neighbour already chosen.
pub fn greedy_independent(g: &Graph, start: &[usize], order: &[usize]) -> Vec<usize> {
    let mut chosen = bits_of(g.n(), start);
    let mut blocked = Bits::with_capacity(g.n());
    for &v in start {
        blocked.union_with(g.adj(v));
    }
    for &v in order {
        if !chosen.contains(v) && !blocked.contains(v) {
            chosen.insert(v);
            blocked.union_with(g.adj(v));
        }
    }
    chosen.ones().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::Probability;
    use crate::rng::Seed;

    fn naive_alpha(g: &Graph) -> usize {
        (0u32..1 << g.n())
            .filter(|&m| {
                let s: Vec<usize> = (0..g.n()).filter(|&i| m >> i & 1 == 1).collect();
                g.is_independent(&s).unwrap()
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..40 {
            let g = crate::graph::gen_gnp(12, Probability::parse("0.35").unwrap(), &Seed::new(seed));
            let s = max_independent_set(&g).unwrap();
            assert!(g.is_independent(&s).unwrap());
            assert_eq!(s.len(), naive_alpha(&g));
        }
    }

    #[test]
    fn simple_cases() {
        assert_eq!(max_independent_set(&Graph::complete(6)).unwrap().len(), 1);
        assert_eq!(max_independent_set(&Graph::empty(6)).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(max_independent_set(&Graph::empty(0)).unwrap().is_empty());
    }

    #[test]
    fn greedy_is_maximal() {
        let g = crate::graph::gen_gnp(30, Probability::parse("0.2").unwrap(), &Seed::new(4));
        let order: Vec<usize> = (0..30).collect();
        let s = greedy_independent(&g, &[], &order);
        assert!(g.is_independent(&s).unwrap());
        for v in 0..30 {
            assert!(s.contains(&v) || s.iter().any(|&u| g.has_edge(u, v)));
        }
    }
}
