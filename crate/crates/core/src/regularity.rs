//! Pair densities, ε-regularity checks on small parts, the slicing parameter formulas and
//! the conforming random split.
//!
//! There is no Regularity Lemma here: its constants are towers and say nothing at these sizes.

use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::ratio::{q, Q};
use crate::rng::Seed;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

/// Parts above this size are checked by sampling.
pub const EXACT_PART_LIMIT: usize = 16;

fn check_pair(x: &[usize], y: &[usize]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return param("density needs two nonempty parts");
    }
    if x.iter().any(|v| y.contains(v)) {
        return param("density parts must be disjoint");
    }
    Ok(())
}

/// `e(X, Y) / (|X||Y|)`.
pub fn density(g: &Graph, x: &[usize], y: &[usize]) -> Result<Q> {
    check_pair(x, y)?;
    let e = g.edge_count_between(x, y)?;
    Ok(q(e as i64, (x.len() * y.len()) as i64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    #[serde(serialize_with = "crate::gadget::ser_q")]
    pub density: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStats {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    #[serde(serialize_with = "crate::gadget::ser_q")]
    pub density: Q,
    #[serde(serialize_with = "crate::gadget::ser_q")]
    pub reference: Q,
    pub regular: bool,
    pub witness: Option<Witness>,
    pub mode: CheckMode,
    /// `min_x |N(x) ∩ Y| / |Y|` and the same from the `Y` side.
    pub min_degree_x: f64,
    pub min_degree_y: f64,
}

/// Smallest integer `k` with `k ≥ ε·size`.
fn min_subset(eps: &Q, size: usize) -> usize {
    let v = eps * q(size as i64, 1);
    v.ceil().to_integer().to_usize().unwrap_or(0).max(1)
}

/// Whether `|d(X', Y') − d| < ε` for every `X' ⊆ X`, `Y' ⊆ Y` with `|X'| ≥ ε|X|`, `|Y'| ≥ ε|Y|`.
///
/// `d` defaults to `d(X, Y)`. Exhaustive over `X'`; for each `X'` and size `k` the extreme
/// `Y'` are the `k` vertices with most or fewest neighbours in `X'`.
pub fn check_eps_regular(g: &Graph, x: &[usize], y: &[usize], eps: &Q, d: Option<&Q>, seed: Option<&Seed>) -> Result<PairStats> {
    let dens = density(g, x, y)?;
    if !eps.is_positive() {
        return param("epsilon must be positive");
    }
    let reference = d.cloned().unwrap_or_else(|| dens.clone());
    let (x, y) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let kx = min_subset(eps, x.len());
    let ky = min_subset(eps, y.len());
    let mode = if x.len() <= EXACT_PART_LIMIT {
        CheckMode::Exhaustive
    } else if seed.is_some() {
        CheckMode::Sampled { samples: 4096 }
    } else {
        return Err(Error::Size { what: "part size for exhaustive check".into(), got: x.len(), limit: EXACT_PART_LIMIT });
    };
    let adj: Vec<Vec<bool>> = x.iter().map(|&u| y.iter().map(|&v| g.has_edge(u, v)).collect()).collect();
    let mut witness = None;
    let test_subset = |xs: &[usize]| -> Option<Witness> {
        let mut counts: Vec<(usize, usize)> = (0..y.len()).map(|j| (xs.iter().filter(|&&i| adj[i][j]).count(), j)).collect();
        counts.sort_unstable();
        let mut low = 0usize;
        let mut high = 0usize;
        for k in 1..=y.len() {
            low += counts[k - 1].0;
            high += counts[y.len() - k].0;
            if k < ky {
                continue;
            }
            let area = (xs.len() * k) as i64;
            for (sum, pick_low) in [(high, false), (low, true)] {
                let dd = q(sum as i64, area);
                if (&dd - &reference).abs() >= *eps {
                    let picked = if pick_low { &counts[..k] } else { &counts[y.len() - k..] };
                    let mut ys: Vec<usize> = picked.iter().map(|c| y[c.1]).collect();
                    ys.sort_unstable();
                    return Some(Witness { x: xs.iter().map(|&i| x[i]).collect(), y: ys, density: dd });
                }
            }
        }
        None
    };
    match mode {
        CheckMode::Exhaustive => {
            for mask in 1u32..(1u32 << x.len()) {
                if (mask.count_ones() as usize) < kx {
                    continue;
                }
                let xs: Vec<usize> = (0..x.len()).filter(|&i| mask >> i & 1 == 1).collect();
                if let Some(w) = test_subset(&xs) {
                    witness = Some(w);
                    break;
                }
            }
        }
        CheckMode::Sampled { samples } => {
            let mut rng = seed.expect("sampled mode has a seed").rng();
            let mut idx: Vec<usize> = (0..x.len()).collect();
            for _ in 0..samples {
                let k = rng.random_range(kx..=x.len());
                idx.shuffle(&mut rng);
                let mut xs = idx[..k].to_vec();
                xs.sort_unstable();
                if let Some(w) = test_subset(&xs) {
                    witness = Some(w);
                    break;
                }
            }
        }
    }
    let min_deg = |a: &[usize], b: &[usize]| {
        a.iter().map(|&u| b.iter().filter(|&&v| g.has_edge(u, v)).count()).min().unwrap_or(0) as f64 / b.len() as f64
    };
    Ok(PairStats {
        min_degree_x: min_deg(x, y),
        min_degree_y: min_deg(y, x),
        x: x.to_vec(),
        y: y.to_vec(),
        density: dens,
        reference,
        regular: witness.is_none(),
        witness,
        mode,
    })
}

/// Density interval `[lo, hi]` (closed) or `(lo, hi)` (open).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DensityWindow {
    #[serde(serialize_with = "crate::gadget::ser_q")]
    pub lo: Q,
    #[serde(serialize_with = "crate::gadget::ser_q")]
    pub hi: Q,
    pub closed: bool,
}

impl DensityWindow {
    pub fn contains(&self, d: &Q) -> bool {
        if self.closed {
            &self.lo <= d && d <= &self.hi
        } else {
            &self.lo < d && d < &self.hi
        }
    }
}

fn max_q(a: Q, b: Q) -> Q {
    if a >= b {
        a
    } else {
        b
    }
}

/// Slicing a regular pair into parts of relative size `β`: `ε' = max(ε/β, 2ε)`, `|d' − d| ≤ ε`.
pub fn slicing_params(eps: &Q, beta: &Q, d: &Q) -> Result<(Q, DensityWindow)> {
    if !(eps.is_positive() && eps < beta) {
        return param(format!("need 0 < eps < beta, got eps={eps}, beta={beta}"));
    }
    if d > &Q::one() || d.is_negative() {
        return param("density must lie in [0, 1]");
    }
    let e2 = max_q(eps / beta, eps * q(2, 1));
    Ok((e2, DensityWindow { lo: d - eps, hi: d + eps, closed: true }))
}

/// Slicing and adding a `ξ` fraction of vertices: `ε' = max(ξ/ε, 6ε)`, `|d' − d| < 3ε`.
pub fn slicing_adding_params(xi: &Q, eps: &Q, d: &Q) -> Result<(Q, DensityWindow)> {
    if !(xi.is_positive() && xi < eps) {
        return param(format!("need 0 < xi < eps, got xi={xi}, eps={eps}"));
    }
    if d > &Q::one() || d.is_negative() {
        return param("density must lie in [0, 1]");
    }
    let e2 = max_q(xi / eps, eps * q(6, 1));
    let r = eps * q(3, 1);
    Ok((e2, DensityWindow { lo: d - &r, hi: d + &r, closed: false }))
}

/// Splits `part` into `pieces` classes of sizes differing by at most one, with all of
/// `Z ∩ part` in the first class and the rest placed uniformly at random.
pub fn random_conforming_split(part: &[usize], z: &[usize], pieces: usize, seed: &Seed) -> Result<Vec<Vec<usize>>> {
    if pieces == 0 {
        return param("pieces must be positive");
    }
    let (base, extra) = part.len().div_rem(&pieces);
    let inside: Vec<usize> = part.iter().copied().filter(|v| z.contains(v)).collect();
    if inside.len() * pieces > part.len() {
        return param(format!("|Z ∩ V_i| = {} exceeds |V_i|/pieces", inside.len()));
    }
    let mut rest: Vec<usize> = part.iter().copied().filter(|v| !z.contains(v)).collect();
    rest.shuffle(&mut seed.rng());
    let mut out = Vec::with_capacity(pieces);
    let mut it = inside.into_iter().chain(rest);
    for i in 0..pieces {
        let size = base + usize::from(i < extra);
        let mut piece: Vec<usize> = it.by_ref().take(size).collect();
        piece.sort_unstable();
        out.push(piece);
    }
    Ok(out)
}
