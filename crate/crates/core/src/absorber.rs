//! Cliques that are good for vertex pairs, and the sampled disjoint absorber built from them.

use crate::error::{param, Error, Result};
use crate::graph::{Bits, Graph};
use crate::ratio::Probability;
use crate::rng::Seed;
use rayon::prelude::*;
use serde::Serialize;

/// Clique enumeration is exhaustive up to this many vertices.
pub const EXACT_FAMILY_N: usize = 30;
/// Cap on the global clique list beyond [`EXACT_FAMILY_N`].
pub const CLIQUE_LIST_LIMIT: usize = 200_000;

/// `v` has at least `|K| − 2` neighbours in `K`.
pub fn is_good(g: &Graph, k: &[usize], v: usize) -> bool {
    debug_assert!(!k.contains(&v));
    let hits = k.iter().filter(|&&u| g.has_edge(u, v)).count();
    hits + 2 >= k.len()
}

/// One global list of `K_{m+k}` copies; each vertex pair's family is a bitset over it.
#[derive(Debug, Clone)]
pub struct PairFamilies {
    pub clique_size: usize,
    pub cliques: Vec<Vec<usize>>,
    pub pairs: Vec<(usize, usize)>,
    pub members: Vec<Bits>,
    /// Whether every clique of the host was enumerated.
    pub exhaustive: bool,
}

impl PairFamilies {
    pub fn family_size(&self, pair: usize) -> usize {
        self.members[pair].count_ones(..)
    }

    pub fn empty_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.pairs.len()).filter(|&i| self.members[i].is_clear()).map(|i| self.pairs[i]).collect()
    }
}

pub fn build_pair_families(g: &Graph, m: usize, k: usize) -> Result<PairFamilies> {
    if !(1..=2).contains(&k) {
        return param("k must be 1 or 2");
    }
    let size = m + k;
    let n = g.n();
    let limit = if n <= EXACT_FAMILY_N { None } else { Some(CLIQUE_LIST_LIMIT) };
    let cliques = g.enumerate_cliques(size, None, limit)?;
    let exhaustive = limit.is_none_or(|l| cliques.len() < l);
    let good: Vec<Bits> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut b = Bits::with_capacity(cliques.len());
            for (i, c) in cliques.iter().enumerate() {
                if !c.contains(&v) && is_good(g, c, v) {
                    b.insert(i);
                }
            }
            b
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let members = pairs
        .par_iter()
        .map(|&(u, v)| {
            let mut b = good[u].clone();
            b.intersect_with(&good[v]);
            b
        })
        .collect();
    Ok(PairFamilies { clique_size: size, cliques, pairs, members, exhaustive })
}

/// Smallest common neighbourhood over all `m`-cliques of `g`.
pub fn min_common_neighbourhood(g: &Graph, m: usize) -> Result<Option<usize>> {
    let sets = g.enumerate_cliques(m, None, Some(CLIQUE_LIST_LIMIT))?;
    Ok(sets.iter().map(|s| g.common_bits(s).count_ones(..)).min())
}

#[derive(Debug, Clone)]
pub struct AbsorberConfig {
    /// `None`: about `2n/(m+k)` cliques are drawn in expectation.
    pub select: Option<Probability>,
    /// Minimum retained cliques per pair family.
    pub target: usize,
    pub retries: usize,
    pub delta2: f64,
}

impl Default for AbsorberConfig {
    fn default() -> Self {
        AbsorberConfig { select: None, target: 1, retries: 5, delta2: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Absorber {
    pub cliques: Vec<Vec<usize>>,
    /// Retained good cliques per pair, in the order of [`PairFamilies::pairs`].
    pub family_counts: Vec<usize>,
    pub retry: usize,
    pub coverage: usize,
    /// `coverage ≤ 10(k+m)δ₂n`.
    pub certified: bool,
}

/// Keeps each listed clique with the configured probability, drops every later clique that
/// meets an earlier kept one, and accepts when every pair family retains `target` cliques.
pub fn sample_absorber(g: &Graph, fam: &PairFamilies, cfg: &AbsorberConfig, seed: &Seed) -> Result<Absorber> {
    if fam.cliques.is_empty() || fam.pairs.is_empty() {
        return Err(Error::Infeasible("no candidate cliques".into()));
    }
    if let Some(&(u, v)) = fam.empty_pairs().first() {
        return Err(Error::Infeasible(format!("pair ({u},{v}) has no good clique")));
    }
    let n = g.n();
    let select = match cfg.select {
        Some(p) => p,
        None => {
            let want = 2.0 * n as f64 / fam.clique_size as f64;
            Probability::from_f64((want / fam.cliques.len() as f64).min(1.0))?
        }
    };
    let mut best = 0;
    for retry in 0..cfg.retries.max(1) {
        let mut rng = seed.child(retry as u64).rng();
        let mut used = Bits::with_capacity(n);
        let mut kept = Bits::with_capacity(fam.cliques.len());
        for (i, c) in fam.cliques.iter().enumerate() {
            if select.sample(&mut rng) && c.iter().all(|&v| !used.contains(v)) {
                kept.insert(i);
                for &v in c {
                    used.insert(v);
                }
            }
        }
        let family_counts: Vec<usize> = fam.members.iter().map(|b| b.intersection_count(&kept)).collect();
        let low = family_counts.iter().copied().min().unwrap_or(0);
        best = best.max(low);
        if low >= cfg.target {
            let cliques: Vec<Vec<usize>> = kept.ones().map(|i| fam.cliques[i].clone()).collect();
            let coverage = cliques.len() * fam.clique_size;
            let certified = coverage as f64 <= 10.0 * fam.clique_size as f64 * cfg.delta2 * n as f64;
            return Ok(Absorber { cliques, family_counts, retry, coverage, certified });
        }
    }
    Err(Error::Infeasible(format!("best retry kept {best} good cliques for its worst pair, target {}", cfg.target)))
}

/// Per-pair good-clique counts recomputed from scratch with [`is_good`].
pub fn recount(g: &Graph, cliques: &[Vec<usize>], pairs: &[(usize, usize)]) -> Vec<usize> {
    pairs
        .iter()
        .map(|&(u, v)| {
            cliques
                .iter()
                .filter(|c| !c.contains(&u) && !c.contains(&v) && is_good(g, c, u) && is_good(g, c, v))
                .count()
        })
        .collect()
}
